import json

from ._base import CouplerCommand
from ...services.output_service import json_default
from ...services.params_service import CouplerParams, ParamsService


class Command(CouplerCommand):
    help = "Prints the regime and derived spectral constants (lambda, eta, zeta) in units of kappa."

    def add_arguments(self, parser):
        parser.add_argument('--kappa', type=float, default=1.0)
        parser.add_argument('--j', type=float, required=True)
        parser.add_argument('--chi', type=float, default=0.0)

    def run(self, *args, **options):
        params = CouplerParams(options['kappa'], options['j'], options['chi']).normalized()
        dc = ParamsService.derive_constants(params)
        payload = {
            'regime': dc.regime.value,
            'j_over_kappa': dc.j_coupling,
            'lambda': dc.lambda_,
            'eta1': dc.eta1,
            'eta2': dc.eta2,
            'zeta1': dc.zeta1,
            'zeta2': dc.zeta2,
            'omega': dc.omega,
        }
        self.stdout.write(json.dumps(payload, default=json_default, indent=2))
