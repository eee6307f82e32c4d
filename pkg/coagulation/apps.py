from django.apps import AppConfig


class CoagulationConfig(AppConfig):
    default_auto_field = "django.db.models.BigAutoField"
    name = "coagulation"
