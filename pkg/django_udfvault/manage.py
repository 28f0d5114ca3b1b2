#!/usr/bin/env python
"""
Django administrative entry point

The udfvault subcommands are management commands, so `python manage.py read FILE DSPATH`
behaves like `python udfvault.py read FILE DSPATH` (create-sample is spelled create_sample
here). Error rendering and exit codes differ; udfvault.py is the supported tool.
"""
import os
import sys

if __name__ == '__main__':
    os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'config.settings.development')
    from django.core.management import execute_from_command_line

    execute_from_command_line(sys.argv)
