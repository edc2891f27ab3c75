from django.apps import AppConfig


class DesignConfig(AppConfig):
    name = "apps.design"
    verbose_name = "Experimental design rounding"
