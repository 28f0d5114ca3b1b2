# Django configuration package
