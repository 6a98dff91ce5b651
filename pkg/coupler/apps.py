from django.apps import AppConfig


class CouplerConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'coupler'
    verbose_name = 'Gain/loss Kerr coupler'
