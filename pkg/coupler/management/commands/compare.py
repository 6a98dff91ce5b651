from pathlib import Path

from ._base import CouplerCommand
from ...services.compare_service import CompareService
from ...services.output_service import OutputService


class Command(CouplerCommand):
    help = "Compares an analytic series file against an oracle series file and prints a JSON verdict."

    def add_arguments(self, parser):
        parser.add_argument('analytic')
        parser.add_argument('oracle')
        parser.add_argument('--tolerance', type=float, help="One relative tolerance for every column")
        parser.add_argument('--notes', default='')
        parser.add_argument('--report', help="Also write the verdict JSON to this path")

    def run(self, *args, **options):
        analytic = OutputService.read_series(options['analytic'])
        oracle = OutputService.read_series(options['oracle'])
        report = CompareService.compare(analytic, oracle, options.get('tolerance'), notes=options['notes'])
        text = report.to_json()
        if options.get('report'):
            Path(options['report']).write_text(text + '\n', encoding='utf-8')
        self.stdout.write(text)
        if report.passed:
            self.stdout.write(self.style.SUCCESS(report.verdict))
        else:
            self.stdout.write(self.style.ERROR(report.verdict))
