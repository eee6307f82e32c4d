from django.apps import AppConfig


class TypespaceConfig(AppConfig):
    default_auto_field = "django.db.models.BigAutoField"
    name = "typespace"
    verbose_name = "Particle type space"
