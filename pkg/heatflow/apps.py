from django.apps import AppConfig


class HeatflowConfig(AppConfig):
    default_auto_field = "django.db.models.BigAutoField"
    name = "heatflow"
    verbose_name = "Heat propagators"
