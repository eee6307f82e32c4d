"""
Scenario files: JSON documents validated before any computation.

Sections: model, grid, init, time, outputs. Unknown keys anywhere are
rejected.
"""

import json
import logging
from dataclasses import dataclass
from pathlib import Path

from django.conf import settings
from rest_framework import serializers

from core.serializers import StrictSerializer
from solver.scenarios import INIT_KINDS, INTEGRATORS, PROFILE_SHAPES, InitialCondition, Scenario
from state.measures import SpatialGrid
from typespace.serializers import ModelDocumentSerializer

logger = logging.getLogger(__name__)

INIT_PARAMETERS = {
    "monodisperse": {"mass_class", "density"},
    "profile": {"mass_class", "shape", "background", "amount", "variance", "center", "amplitude", "wavenumber"},
    "file": {"path"},
}


class ScenarioFileError(Exception):
    """The scenario file is unreadable, not JSON, or fails schema validation."""

    def __init__(self, path, detail):
        self.path = path
        self.detail = detail
        super().__init__(f"{path}: {detail}")


class GridSerializer(StrictSerializer):
    dim = serializers.IntegerField(min_value=1, max_value=3)
    cells_per_axis = serializers.IntegerField(min_value=1)
    length = serializers.FloatField()

    def validate_length(self, value):
        if value <= 0:
            raise serializers.ValidationError("Must be positive.")
        return value


class InitSerializer(StrictSerializer):
    kind = serializers.ChoiceField(choices=INIT_KINDS)
    parameters = serializers.DictField(required=False, default=dict)

    def validate(self, attrs):
        params = attrs["parameters"]
        unknown = sorted(set(params) - INIT_PARAMETERS[attrs["kind"]])
        if unknown:
            raise serializers.ValidationError({"parameters": [f"Unknown parameter for {attrs['kind']}: {key}" for key in unknown]})
        if attrs["kind"] == "file" and not params.get("path"):
            raise serializers.ValidationError({"parameters": ["File initial data needs a path."]})
        if params.get("shape", "gaussian") not in PROFILE_SHAPES:
            raise serializers.ValidationError({"parameters": [f"shape must be one of {PROFILE_SHAPES}."]})
        return attrs


class TimeSerializer(StrictSerializer):
    dt = serializers.FloatField()
    t_end = serializers.FloatField(min_value=0.0)
    integrator = serializers.ChoiceField(choices=INTEGRATORS, default="strang")
    picard_tol = serializers.FloatField(required=False)
    picard_kmax = serializers.IntegerField(required=False, min_value=1)
    cadence = serializers.IntegerField(default=1, min_value=1)

    def validate_dt(self, value):
        if value <= 0:
            raise serializers.ValidationError("Must be positive.")
        return value


class OutputsSerializer(StrictSerializer):
    dir = serializers.CharField(required=False, allow_blank=False)
    snapshots = serializers.BooleanField(default=False)


class ScenarioSerializer(StrictSerializer):
    """
    Full scenario document. validate() assembles the Scenario, so every
    precondition the solver enforces is reported as a schema error here.
    """

    name = serializers.CharField(required=False)
    model = ModelDocumentSerializer()
    grid = GridSerializer()
    init = InitSerializer()
    time = TimeSerializer()
    outputs = OutputsSerializer(required=False)

    def validate(self, attrs):
        base_dir = Path(self.context.get("base_dir", "."))
        parameters = dict(attrs["init"]["parameters"])
        if attrs["init"]["kind"] == "file":
            parameters["path"] = str(base_dir / parameters["path"])
        try:
            scenario = self._assemble(attrs, parameters)
            # sampled here so bad initial data is a schema error, not a solver error
            scenario.initial
        except (TypeError, ValueError) as e:
            raise serializers.ValidationError({"init": [str(e)]}) from e
        attrs["scenario"] = scenario
        return attrs

    def _assemble(self, attrs, parameters):
        time = attrs["time"]
        optional = {key: time[key] for key in ("picard_tol", "picard_kmax") if key in time}
        outputs = attrs.get("outputs") or {}
        return Scenario(
            model=attrs["model"]["built"],
            grid=SpatialGrid(**attrs["grid"]),
            init=InitialCondition(attrs["init"]["kind"], parameters),
            dt=time["dt"],
            t_end=time["t_end"],
            integrator=time["integrator"],
            cadence=time["cadence"],
            snapshots=outputs.get("snapshots", False),
            name=attrs.get("name") or self.context.get("default_name", "scenario"),
            **optional,
        )


@dataclass(frozen=True)
class ScenarioFile:
    path: Path
    scenario: Scenario
    output_dir: Path


def load_scenario(path):
    """Parse and validate a scenario file; raises ScenarioFileError."""
    path = Path(path)
    try:
        document = json.loads(path.read_text())
    except OSError as e:
        raise ScenarioFileError(path, f"cannot read file ({e.strerror})") from e
    except json.JSONDecodeError as e:
        raise ScenarioFileError(path, f"invalid JSON ({e})") from e
    if not isinstance(document, dict):
        raise ScenarioFileError(path, "top level must be a JSON object")

    serializer = ScenarioSerializer(data=document, context={"base_dir": path.parent, "default_name": path.stem})
    if not serializer.is_valid():
        raise ScenarioFileError(path, json.dumps(serializer.errors, sort_keys=True))
    scenario = serializer.validated_data["scenario"]
    outputs = serializer.validated_data.get("outputs") or {}
    output_dir = Path(outputs["dir"]) if outputs.get("dir") else Path(settings.OUTPUT_ROOT) / scenario.name
    if not output_dir.is_absolute():
        output_dir = path.parent / output_dir
    logger.debug(f"Loaded scenario {scenario.name} from {path}")
    return ScenarioFile(path=path, scenario=scenario, output_dir=output_dir)
