from ._base import ORACLE_FLAGS, ScenarioCommand


class Command(ScenarioCommand):
    help = "Truncated-Fock master-equation reference run; fails with exit 3 when leakage exceeds the threshold."
    variant = 'ORACLE'
    extra_flags = ORACLE_FLAGS
