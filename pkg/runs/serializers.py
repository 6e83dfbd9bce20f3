from django.conf import settings
from rest_framework import serializers
import math

from common.exceptions import PeriodMismatch
from common.serializers import FiniteFloatField, PositiveFloatField
from equilibrium.serializers import ProfileDescriptorSerializer
from modes_fixedpoint.problems import check_quantized

STAGE_ORDER = ['equilibrium', 'l0', 'g', 'p', 'dispersion', 'synth']


class WavenumberMixin(serializers.Serializer):
    """
    Horizontal wavenumber given directly as l or as a harmonic of the period.
    """
    l = PositiveFloatField(required=False)
    harmonic = serializers.IntegerField(min_value=1, required=False)

    def validate(self, attrs):
        if 'l' in attrs and 'harmonic' in attrs:
            raise serializers.ValidationError({'l': "Give either l or harmonic, not both."})
        return attrs


class EquilibriumStageSerializer(serializers.Serializer):
    points = serializers.IntegerField(min_value=3, required=False)


class VerticalStageSerializer(serializers.Serializer):
    n_max = serializers.IntegerField(min_value=1, default=3)
    shooting = serializers.BooleanField(default=True)


class BranchStageSerializer(WavenumberMixin):
    """
    Fixed-point request for one branch: mode indices n_min..n_max below an
    optional upper parameter (lambda0 for g, mu0 for p).
    """
    n_min = serializers.IntegerField(min_value=1, default=1)
    n_max = serializers.IntegerField(min_value=1, default=8)
    upper = PositiveFloatField(required=False)

    def validate(self, attrs):
        attrs = super().validate(attrs)
        if attrs['n_min'] > attrs['n_max']:
            raise serializers.ValidationError({'n_max': "Must not be smaller than n_min."})
        return attrs


class DispersionStageSerializer(WavenumberMixin):
    """
    Dispersion scan. Without an explicit range the scans cover the g- and
    p-mode eigenvalues found by the fixed-point stages.
    """
    lambda_min = PositiveFloatField(required=False)
    lambda_max = PositiveFloatField(required=False)
    grid = serializers.IntegerField(min_value=16, default=128)
    z_m = PositiveFloatField(required=False)

    def validate(self, attrs):
        attrs = super().validate(attrs)
        if ('lambda_min' in attrs) != ('lambda_max' in attrs):
            raise serializers.ValidationError({'lambda_max': "lambda_min and lambda_max go together."})
        if 'lambda_min' in attrs and attrs['lambda_min'] >= attrs['lambda_max']:
            raise serializers.ValidationError({'lambda_max': "Must exceed lambda_min."})
        return attrs


class SynthModeSerializer(serializers.Serializer):
    direction = serializers.ChoiceField(choices=['x', 'y'], default='x')
    l = PositiveFloatField()
    amplitude = FiniteFloatField(default=1.0)

    def get_fields(self):
        fields = super().get_fields()
        fields['lambda'] = PositiveFloatField()
        return fields


class SynthStageSerializer(serializers.Serializer):
    """
    Wave synthesis from explicit modes, or from the first dispersion root.
    """
    modes = SynthModeSerializer(many=True, required=False)
    kind = serializers.ChoiceField(choices=['standing', 'progressive'], default='standing')
    epsilon = FiniteFloatField(required=False)
    nt = serializers.IntegerField(min_value=2, default=17)
    nx = serializers.IntegerField(min_value=2, default=32)
    nz = serializers.IntegerField(min_value=2, default=33)
    points = serializers.IntegerField(min_value=12, required=False)

    def validate_epsilon(self, value):
        if value < 0.0:
            raise serializers.ValidationError("epsilon must be nonnegative.")
        return value


class StagesSerializer(serializers.Serializer):
    equilibrium = EquilibriumStageSerializer(required=False)
    l0 = VerticalStageSerializer(required=False)
    g = BranchStageSerializer(required=False)
    p = BranchStageSerializer(required=False)
    dispersion = DispersionStageSerializer(required=False)
    synth = SynthStageSerializer(required=False)


class RunConfigSerializer(ProfileDescriptorSerializer):
    """
    Serializer for batch run configurations: the profile descriptor plus
    horizontal periods, requested stages, output directory and overrides of
    the numerical SPECTRAL_LAB defaults.
    """
    x_plus = PositiveFloatField(default=1.0)
    y_plus = PositiveFloatField(default=1.0)
    output_dir = serializers.CharField(required=False, allow_blank=False)
    tolerances = serializers.DictField(child=PositiveFloatField(), required=False)
    stages = StagesSerializer(required=False)

    def validate_tolerances(self, value):
        known = getattr(settings, 'SPECTRAL_LAB', {})
        unknown = sorted(name for name in value if not isinstance(known.get(name), float))
        if unknown:
            raise serializers.ValidationError(f"Unknown tolerance settings: {', '.join(unknown)}")
        return value

    def validate(self, attrs):
        stages = dict(attrs.get('stages') or {})
        stages.setdefault('equilibrium', {})
        errors = {}

        for name in ('g', 'p', 'dispersion'):
            if name not in stages:
                continue
            stage = dict(stages[name])
            l = stage.pop('l', None) or 2.0 * math.pi * stage.pop('harmonic', 1) / attrs['x_plus']
            stage.pop('harmonic', None)
            try:
                check_quantized(l, attrs['x_plus'])
            except PeriodMismatch:
                errors[name] = {'l': [f"l * x_plus = {l * attrs['x_plus']:.6g} is not a multiple of 2 pi."]}
            stage['l'] = l
            stages[name] = stage

        synth = stages.get('synth')
        if synth is not None:
            mode_errors = {}
            for index, mode in enumerate(synth.get('modes') or []):
                period = attrs['x_plus'] if mode['direction'] == 'x' else attrs['y_plus']
                try:
                    check_quantized(mode['l'], period)
                except PeriodMismatch:
                    mode_errors[index] = {'l': ["Not quantized by the period of its direction."]}
            if mode_errors:
                errors['synth'] = {'modes': [mode_errors.get(index, {}) for index in range(len(synth['modes']))]}
            elif not synth.get('modes') and 'dispersion' not in stages:
                errors['synth'] = {'modes': ["Required unless a dispersion stage provides the roots."]}

        if errors:
            raise serializers.ValidationError({'stages': errors})
        attrs['stages'] = stages
        return attrs
