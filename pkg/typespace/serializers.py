"""
Model documents: the `model` section of a scenario file.

Derived kernels (es, constant) rebuild their tables; any weights supplied
alongside them must agree with the derived ones.
"""

import numpy as np
from rest_framework import serializers

from core.conf import solver_setting
from core.serializers import StrictSerializer

from .kernels import KERNEL_TYPES, Model, build_constant_model, build_es_model, build_table_model


class KernelSerializer(StrictSerializer):
    type = serializers.ChoiceField(choices=KERNEL_TYPES)
    rate = serializers.FloatField(required=False, allow_null=True, min_value=0.0)
    table = serializers.ListField(
        child=serializers.ListField(child=serializers.FloatField()),
        required=False,
        allow_null=True,
    )

    def validate(self, attrs):
        if attrs["type"] == "table" and not attrs.get("table"):
            raise serializers.ValidationError({"table": ["Required for table kernels."]})
        if attrs["type"] != "table" and attrs.get("table"):
            raise serializers.ValidationError({"table": [f"Not allowed for {attrs['type']} kernels."]})
        table = attrs.get("table")
        if table and len({len(row) for row in table}) != 1:
            raise serializers.ValidationError({"table": ["Every row must have the same length."]})
        return attrs


class ModelDocumentSerializer(StrictSerializer):
    """
    Validate a model document and build the immutable Model.

    Serializing a Model instance returns Model.to_document().
    """

    dim = serializers.IntegerField(min_value=1, max_value=3)
    mass_unit = serializers.FloatField(default=1.0)
    num_classes = serializers.IntegerField(min_value=1)
    diffusivity = serializers.ListField(child=serializers.FloatField(), required=False, allow_null=True)
    weights = serializers.ListField(child=serializers.FloatField(), required=False, allow_null=True)
    v_weights = serializers.ListField(child=serializers.FloatField(), required=False, allow_null=True)
    kernel = KernelSerializer()

    def validate_mass_unit(self, value):
        if not np.isfinite(value) or value <= 0:
            raise serializers.ValidationError("Must be positive.")
        return value

    def validate(self, attrs):
        kernel = attrs["kernel"]
        if kernel["type"] == "es":
            model = self._build_es(attrs)
        elif kernel["type"] == "constant":
            model = self._build_constant(attrs)
        else:
            model = self._build_table(attrs)
        attrs["built"] = model
        return attrs

    def _build_es(self, attrs):
        if attrs["dim"] != 3:
            raise serializers.ValidationError({"dim": ["The Einstein-Smoluchowski model is three-dimensional."]})
        model = build_es_model(attrs["num_classes"], attrs["mass_unit"])
        self._check_derived(attrs, model)
        return model

    def _build_constant(self, attrs):
        rate = attrs["kernel"].get("rate")
        rate = 1.0 if rate is None else rate
        a_const = 1.0
        if attrs.get("diffusivity"):
            values = np.asarray(attrs["diffusivity"], dtype=float)
            if not np.all(values == values[0]):
                raise serializers.ValidationError({"diffusivity": ["Constant kernels need one shared diffusivity."]})
            a_const = float(values[0])
        model = build_constant_model(attrs["num_classes"], attrs["mass_unit"], rate=rate, a_const=a_const, dim=attrs["dim"])
        self._check_derived(attrs, model)
        return model

    def _build_table(self, attrs):
        missing = [name for name in ("diffusivity", "weights") if not attrs.get(name)]
        if missing:
            raise serializers.ValidationError({name: ["Required for table kernels."] for name in missing})
        return build_table_model(
            attrs["num_classes"],
            attrs["mass_unit"],
            attrs["dim"],
            attrs["diffusivity"],
            attrs["weights"],
            attrs["kernel"]["table"],
            v_weights=attrs.get("v_weights"),
        )

    def _check_derived(self, attrs, model):
        derived = {"diffusivity": model.diffusivity, "weights": model.weights, "v_weights": model.v_weights}
        errors = {}
        for name, expected in derived.items():
            given = attrs.get(name)
            if not given:
                continue
            if expected is None:
                errors[name] = [f"Not defined for {model.kernel_type} kernels."]
            elif len(given) != len(expected) and not (name == "diffusivity" and len(given) == 1):
                errors[name] = [f"Expected {len(expected)} entries, got {len(given)}."]
            elif not np.allclose(given, expected, rtol=solver_setting("DERIVED_MATCH_RTOL"), atol=0.0):
                errors[name] = [f"Does not match the values derived for {model.kernel_type} kernels."]
        if errors:
            raise serializers.ValidationError(errors)

    def create(self, validated_data):
        return validated_data["built"]

    def to_representation(self, instance):
        if isinstance(instance, Model):
            return instance.to_document()
        return super().to_representation(instance)
