from django import forms

from .conf import get_setting
from .records import ScenarioConfig

VARIANTS = ['NOISY', 'NOISELESS', 'LINEAR', 'MEANFIELD', 'ORACLE']
QUANTITIES = ['moments', 'quadratures', 'change_ratio', 'd3', 'eb1_overlap']
FORMATS = ['CSV', 'JSON']


def _choices(values):
    return [(value, value) for value in values]


class ScenarioForm(forms.Form):
    """
    Validates a run request coming from command-line flags or a --config file.
    Rates arrive raw and are normalized to units of kappa in clean().
    """
    name = forms.CharField(max_length=100, required=False)
    kappa = forms.FloatField(initial=1.0, help_text="Gain/loss rate; every other rate is divided by it")
    j = forms.FloatField(min_value=0.0, initial=0.6, label="J")
    chi = forms.FloatField(min_value=0.0, required=False, initial=0.0)
    alpha0_re = forms.FloatField(initial=1.0)
    alpha0_im = forms.FloatField(required=False, initial=0.0)
    variant = forms.ChoiceField(choices=_choices(VARIANTS), initial='LINEAR')
    quantity = forms.ChoiceField(choices=_choices(QUANTITIES), required=False, initial='moments')
    t_max = forms.FloatField(min_value=0.0, initial=5.0, help_text="In units of 1/kappa")
    n_samples = forms.IntegerField(min_value=2, initial=101)
    include_eb1 = forms.NullBooleanField(required=False)

    sweep_j_min = forms.FloatField(min_value=0.0, required=False, help_text="J/kappa")
    sweep_j_max = forms.FloatField(min_value=0.0, required=False, help_text="J/kappa")
    sweep_steps = forms.IntegerField(min_value=1, required=False)

    oracle_n_a = forms.IntegerField(min_value=1, required=False)
    oracle_n_b = forms.IntegerField(min_value=1, required=False)
    oracle_dt = forms.FloatField(required=False, help_text="Step in units of 1/kappa")

    output = forms.CharField(max_length=500, required=False)
    fmt = forms.ChoiceField(choices=_choices(FORMATS), required=False, initial='CSV')

    def clean_kappa(self):
        kappa = self.cleaned_data['kappa']
        if not kappa > 0:
            raise forms.ValidationError("kappa must be positive; results are reported in units of kappa.")
        return kappa

    def clean_oracle_dt(self):
        dt = self.cleaned_data.get('oracle_dt')
        if dt is not None and not dt > 0:
            raise forms.ValidationError("oracle step must be positive.")
        return dt

    def clean(self):
        cleaned_data = super().clean()
        if self.errors:
            return cleaned_data

        sweep_keys = ('sweep_j_min', 'sweep_j_max', 'sweep_steps')
        given = [cleaned_data.get(key) is not None for key in sweep_keys]
        if any(given[:2]) and not all(given[:2]):
            raise forms.ValidationError("A sweep needs both sweep_j_min and sweep_j_max.")
        if all(given[:2]):
            low, high = cleaned_data['sweep_j_min'], cleaned_data['sweep_j_max']
            if low > high:
                raise forms.ValidationError("sweep_j_min must not exceed sweep_j_max.")
            margin = get_setting('SWEEP_EP_MARGIN')
            below = high <= 1 - margin
            above = low >= 1 + margin
            if not (below or above):
                raise forms.ValidationError(
                    f"Sweep range [{low}, {high}] must stay at least {margin} away from J/kappa = 1."
                )

        if cleaned_data['variant'] == 'ORACLE':
            if cleaned_data.get('oracle_n_a') is None or cleaned_data.get('oracle_n_b') is None:
                raise forms.ValidationError("ORACLE runs need oracle_n_a and oracle_n_b.")
        return cleaned_data

    def to_config(self):
        """Builds the normalized ScenarioConfig from a valid form."""
        data = self.cleaned_data
        kappa = data['kappa']
        sweep = None
        if data.get('sweep_j_min') is not None:
            sweep = {
                'j_min': data['sweep_j_min'],
                'j_max': data['sweep_j_max'],
                'j_steps': data.get('sweep_steps') or get_setting('PRESET_GRID'),
            }
        oracle = None
        if data.get('oracle_n_a') is not None and data.get('oracle_n_b') is not None:
            oracle = {
                'n_a': data['oracle_n_a'],
                'n_b': data['oracle_n_b'],
                'dt': data.get('oracle_dt') or get_setting('ORACLE_DT'),
            }
        include_eb1 = data.get('include_eb1')
        return ScenarioConfig(
            name=data.get('name') or '',
            kappa=kappa,
            j_over_kappa=data['j'] / kappa,
            chi_over_kappa=(data.get('chi') or 0.0) / kappa,
            alpha0_re=data['alpha0_re'],
            alpha0_im=data.get('alpha0_im') or 0.0,
            variant=data['variant'],
            quantity=data.get('quantity') or 'moments',
            t_max=data['t_max'],
            n_samples=data['n_samples'],
            include_eb1=True if include_eb1 is None else include_eb1,
            sweep=sweep,
            oracle=oracle,
            output=data.get('output') or '',
            fmt=data.get('fmt') or 'CSV',
        )
