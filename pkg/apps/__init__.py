# apps package for local Django apps
