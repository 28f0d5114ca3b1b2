"""
Unit tests for the UDF backend registry
"""
import json

import pytest

from apps.udf.exceptions import CompileError, DuplicateBackend, UnknownBackend
from apps.udf.services.backends import (
    BackendRegistry,
    ExprBackend,
    HostedBackend,
    build_registry,
    get_default_registry,
    parse_hosted_source,
    register_backend,
)


@pytest.mark.unit
class TestRegistry:
    """Backend registration and lookup"""

    def test_build_registry(self):
        """expr and hosted are registered, hosted with the given functions"""
        registry = build_registry(['apps.udf.services.hosted_demo.fill_index'])
        assert registry.names() == ['expr', 'hosted']
        assert registry.get('hosted').function_names == ['fill_index']

    def test_register_backend(self):
        """register_backend makes a backend available by name"""
        registry = BackendRegistry()
        register_backend(registry, ExprBackend())
        assert isinstance(registry.get('expr'), ExprBackend)

    def test_duplicate_name(self):
        """A name can be registered once"""
        registry = BackendRegistry([ExprBackend()])
        with pytest.raises(DuplicateBackend):
            register_backend(registry, ExprBackend())

    def test_frozen_registry(self):
        """A frozen registry accepts no new backends"""
        registry = BackendRegistry([ExprBackend()]).freeze()
        assert registry.frozen
        with pytest.raises(DuplicateBackend):
            register_backend(registry, HostedBackend())

    def test_unknown_backend(self):
        """Lookups of unregistered names fail"""
        with pytest.raises(UnknownBackend):
            BackendRegistry().get('lua')

    def test_default_registry(self):
        """The application registry is frozen and carries the configured functions"""
        registry = get_default_registry()
        assert registry.frozen
        assert registry.get('hosted').function_names == ['csv_project', 'fill_index']

    def test_duplicate_hosted_function(self):
        """Two different functions cannot share a hosted name"""
        hosted = HostedBackend()
        hosted.register_function(lambda lib: None, 'f')
        with pytest.raises(DuplicateBackend):
            hosted.register_function(lambda lib: None, 'f')


@pytest.mark.unit
class TestHostedSource:
    """Hosted source parsing"""

    def test_plain_name(self):
        """A bare identifier names the function"""
        assert parse_hosted_source(' fill_index\n') == {'function': 'fill_index', 'options': {}}

    def test_json_with_options(self):
        """The JSON form carries options"""
        source = json.dumps({'function': 'csv_project', 'options': {'path': '/data/a.csv'}})
        assert parse_hosted_source(source)['options'] == {'path': '/data/a.csv'}

    @pytest.mark.parametrize('source', [
        '{not json',
        '{"function": "not a name"}',
        '{"function": "f", "options": [1]}',
        'two words',
    ])
    def test_invalid(self, source):
        """Malformed hosted sources are compile errors"""
        with pytest.raises(CompileError):
            parse_hosted_source(source)
