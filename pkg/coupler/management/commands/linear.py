from ._base import ScenarioCommand


class Command(ScenarioCommand):
    help = "Linear coupler (chi = 0): closed-form mean modes and photon numbers including spontaneous photons."
    variant = 'LINEAR'
