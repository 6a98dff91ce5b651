import os

import django

os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'waveguide_sim.settings')
django.setup()
