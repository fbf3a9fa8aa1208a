"""
Problem-file runner shared by the CLI and the HTTP API.

Every library operation is registered under a task op name. A task's args are
plain values, names of entities (or of earlier task outputs), or inline
entities. Reports are plain dicts ready for canonical_dumps.
"""
import logging
import time
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ValidationError

from app.config import settings
from app.exceptions import GaussianToolkitError, ProblemValidationError, TaskExecutionError
from app.schemas.bosonic import BosonicObservableSchema, GridSchema
from app.schemas.channel import ChannelSchema, DilationSchema
from app.schemas.fock import FockOperatorSchema
from app.schemas.observable import (
    DirectionsSchema,
    DistributionSchema,
    ObservableSchema,
    ObservableSetSchema,
)
from app.schemas.problem import ProblemFile
from app.schemas.state import StateSchema
from app.services import bosonic, channels, fock_oracle, infocomplete, observables, states, symplectic
from app.services.bosonic import BosonicObservable
from app.services.channels import DilationSpec, GaussianChannel
from app.services.fock_oracle import FockOperator
from app.services.infocomplete import DirectionSample, ObservableSet
from app.services.observables import GaussianDistribution, GaussianObservable
from app.services.states import GaussianState
from app.utils.helpers import digest, max_abs, to_jsonable

# Set up logging
logger = logging.getLogger(__name__)

SCHEMAS: Dict[str, type] = {
    "state": StateSchema,
    "channel": ChannelSchema,
    "dilation": DilationSchema,
    "observable": ObservableSchema,
    "observable_set": ObservableSetSchema,
    "distribution": DistributionSchema,
    "directions": DirectionsSchema,
    "fock": FockOperatorSchema,
    "bosonic": BosonicObservableSchema,
}

DOMAIN_TYPES: Dict[str, type] = {
    "state": GaussianState,
    "channel": GaussianChannel,
    "dilation": DilationSpec,
    "observable": GaussianObservable,
    "observable_set": ObservableSet,
    "distribution": GaussianDistribution,
    "directions": DirectionSample,
    "fock": FockOperator,
    "bosonic": BosonicObservable,
}


@dataclass(frozen=True)
class RunOptions:
    seed: int = 0
    tol: Optional[float] = None
    cutoff: Optional[int] = None
    timing: bool = False


@dataclass(frozen=True)
class Operation:
    name: str
    handler: Callable[["TaskContext", Dict[str, Any]], Tuple[Dict[str, Any], Any]]
    refs: Dict[str, str]
    required: Tuple[str, ...]
    produces: Optional[str]


OPERATIONS: Dict[str, Operation] = {}


def operation(name: str, refs: Optional[Dict[str, str]] = None, required: Sequence[str] = (),
              produces: Optional[str] = None):
    """
    Register a task handler

    ``refs`` maps argument names to entity kinds; a kind prefixed with "*"
    takes a list of references. Handlers return (report outputs, value to
    store under output_name).
    """
    def decorator(func):
        OPERATIONS[name] = Operation(
            name=name, handler=func, refs=dict(refs or {}), required=tuple(required), produces=produces
        )
        return func
    return decorator


@dataclass
class TaskContext:
    entities: Dict[str, BaseModel]
    options: RunOptions
    index: int = 0
    outputs: Dict[str, Tuple[str, Any]] = field(default_factory=dict)

    @property
    def tol(self) -> Optional[float]:
        return self.options.tol

    @property
    def seed(self) -> List[int]:
        return [int(self.options.seed), int(self.index)]

    def schema(self, ref: Any, kind: str) -> BaseModel:
        """Entity schema for a name or an inline object"""
        if isinstance(ref, str):
            if ref not in self.entities:
                raise ProblemValidationError(f"Undefined entity '{ref}'")
            entity = self.entities[ref]
            if entity.kind != kind:
                raise ProblemValidationError(f"Entity '{ref}' is a {entity.kind}, expected {kind}")
            return entity
        if isinstance(ref, BaseModel):
            return ref
        try:
            return SCHEMAS[kind].model_validate(ref)
        except ValidationError as exc:
            raise ProblemValidationError(f"Invalid inline {kind}: {exc}") from exc

    def resolve(self, ref: Any, kind: str) -> Any:
        """Domain value for a reference of the given kind"""
        if isinstance(ref, str) and ref in self.outputs:
            out_kind, value = self.outputs[ref]
            if out_kind != kind:
                raise ProblemValidationError(f"Output '{ref}' is a {out_kind}, expected {kind}")
            return value
        if kind == "observable_set":
            return self._resolve_set(ref)
        entity = self.schema(ref, kind)
        if kind == "bosonic" and isinstance(entity.sigma, str):
            sigma = self.resolve(entity.sigma, "fock")
            return self._build(ref, kind, lambda: entity.to_domain(self.tol, sigma=sigma))
        if kind == "fock":
            return self._build(ref, kind, lambda: entity.to_domain(self.options.cutoff))
        return self._build(ref, kind, lambda: entity.to_domain(self.tol))

    @staticmethod
    def _build(ref: Any, kind: str, construct: Callable[[], Any]) -> Any:
        """Run an entity constructor; an entity that cannot be built makes the problem invalid"""
        try:
            return construct()
        except (GaussianToolkitError, ValueError, np.linalg.LinAlgError) as exc:
            label = f"'{ref}'" if isinstance(ref, str) else "inline"
            raise ProblemValidationError(f"Invalid {kind} entity {label}: {exc}") from exc

    def _resolve_set(self, ref: Any) -> ObservableSet:
        if isinstance(ref, list):
            members = ref
        else:
            members = self.schema(ref, "observable_set").members
        resolved = [self.resolve(m, "observable") for m in members]
        return self._build(ref if isinstance(ref, str) else None, "observable_set",
                           lambda: infocomplete.make_observable_set(resolved, self.tol))

    def describe(self, value: Any) -> Any:
        """JSON form of an argument, with references replaced by their content"""
        if isinstance(value, str) and value in self.outputs:
            return {"output": value, "value": report_value(self.outputs[value][1])}
        if isinstance(value, str) and value in self.entities:
            return self.entities[value].model_dump(exclude_none=True)
        if isinstance(value, list):
            return [self.describe(v) for v in value]
        if isinstance(value, dict):
            return {k: self.describe(v) for k, v in value.items()}
        return value


def report_value(value: Any) -> Any:
    """Plain JSON form of a domain value"""
    if isinstance(value, GaussianState):
        return StateSchema.from_domain(value).model_dump(include={"n_modes", "m", "v"})
    if isinstance(value, GaussianChannel):
        include = {"in_modes", "out_modes", "a", "b_re", "b_im", "v"}
        return ChannelSchema.from_domain(value).model_dump(include=include)
    if isinstance(value, GaussianObservable):
        include = {"n_modes", "outcome_dim", "a0", "b0", "v0"}
        return ObservableSchema.from_domain(value).model_dump(include=include)
    if isinstance(value, GaussianDistribution):
        return DistributionSchema.from_domain(value).model_dump(include={"mean", "cov"})
    if isinstance(value, FockOperator):
        return FockOperatorSchema.from_domain(value).model_dump(include={"cutoff", "re", "im"})
    return to_jsonable(value)


def _validation(result: symplectic.ValidationResult, kind: str) -> Dict[str, Any]:
    return {"kind": kind, "valid": result.valid, "min_eigenvalue": result.min_eigenvalue, "message": result.message}


# Symplectic

@operation("omega", required=("n_modes",))
def _omega(ctx: TaskContext, args: Dict[str, Any]):
    return {"matrix": symplectic.omega(int(args["n_modes"])).matrix}, None


@operation("is-symplectic", required=("s",))
def _is_symplectic(ctx: TaskContext, args: Dict[str, Any]):
    return {"symplectic": symplectic.is_symplectic(args["s"], ctx.tol)}, None


@operation("psd-check", required=("re",))
def _psd_check(ctx: TaskContext, args: Dict[str, Any]):
    matrix = np.asarray(args["re"], dtype=float) + 1j * np.asarray(args.get("im", 0.0), dtype=float)
    return _validation(symplectic.psd_diagnostic(matrix, ctx.tol), "matrix"), None


@operation("williamson", required=("b",))
def _williamson(ctx: TaskContext, args: Dict[str, Any]):
    result = symplectic.williamson(args["b"], ctx.tol)
    return {"s": result.s, "betas": result.betas}, None


_ELEMENTS = {
    "beam_splitter": (channels.beam_splitter, 2),
    "phase_rotation": (channels.phase_rotation, 1),
    "squeezer": (channels.single_mode_squeezer, 1),
}


@operation("optical-symplectic", required=("element", "param"))
def _optical_symplectic(ctx: TaskContext, args: Dict[str, Any]):
    if args["element"] not in _ELEMENTS:
        raise ProblemValidationError(f"Unknown optical element '{args['element']}'")
    builder, width = _ELEMENTS[args["element"]]
    local = builder(float(args["param"]))
    modes = args.get("modes", list(range(width)))
    s = channels.embed(local, modes, int(args.get("n_modes", width)))
    return {"s": s, "symplectic": symplectic.is_symplectic(s, ctx.tol)}, None


# States and channels

@operation("validate", required=("entity",))
def _validate(ctx: TaskContext, args: Dict[str, Any]):
    ref = args["entity"]
    kind = ctx.entities[ref].kind if isinstance(ref, str) and ref in ctx.entities else (
        ref.get("kind") if isinstance(ref, dict) else None
    )
    if kind == "state":
        entity = ctx.schema(ref, "state")
        if entity.preset is None:
            v = np.asarray(entity.v, dtype=float)
            n = symplectic.modes_of(v.shape[0], "V")
            if max_abs(v - v.T) > (settings.DEFAULT_TOL if ctx.tol is None else ctx.tol):
                return {"kind": "state", "valid": False, "min_eigenvalue": None,
                        "message": "Covariance matrix is not symmetric"}, None
            diagnostic = symplectic.psd_diagnostic(v + 1j * symplectic.omega_matrix(n), ctx.tol, "V + iΩ")
            return _validation(diagnostic, "state"), None
        ctx.resolve(ref, "state")
        return {"kind": "state", "valid": True, "min_eigenvalue": None, "message": "ok"}, None
    if kind == "channel":
        return _validation(channels.validate_channel(ctx.resolve(ref, "channel"), ctx.tol), "channel"), None
    if kind == "observable":
        return _validation(observables.validate_observable(ctx.resolve(ref, "observable"), ctx.tol), "observable"), None
    raise ProblemValidationError(f"validate needs a state, channel or observable, got {kind}")


@operation("weyl-transform", refs={"state": "state"}, required=("state", "x"))
def _weyl_transform(ctx: TaskContext, args: Dict[str, Any]):
    return {"value": states.weyl_transform(ctx.resolve(args["state"], "state"), args["x"])}, None


@operation("transform-state", refs={"state": "state"}, required=("state", "s"), produces="state")
def _transform_state(ctx: TaskContext, args: Dict[str, Any]):
    out = states.transform_state(ctx.resolve(args["state"], "state"), args["s"], args.get("d"))
    return {"state": report_value(out)}, out


@operation("direct-sum", refs={"states": "*state"}, required=("states",), produces="state")
def _direct_sum(ctx: TaskContext, args: Dict[str, Any]):
    out = states.direct_sum(*[ctx.resolve(s, "state") for s in args["states"]])
    return {"state": report_value(out)}, out


@operation("apply-channel", refs={"channel": "channel", "state": "state"}, required=("channel", "state"),
           produces="state")
def _apply_channel(ctx: TaskContext, args: Dict[str, Any]):
    out = channels.apply_channel(ctx.resolve(args["channel"], "channel"), ctx.resolve(args["state"], "state"), ctx.tol)
    return {"state": report_value(out)}, out


@operation("compose-channels", refs={"first": "channel", "second": "channel"}, required=("first", "second"),
           produces="channel")
def _compose_channels(ctx: TaskContext, args: Dict[str, Any]):
    out = channels.compose_channels(ctx.resolve(args["first"], "channel"), ctx.resolve(args["second"], "channel"))
    return {"channel": report_value(out), "valid": channels.validate_channel(out, ctx.tol).valid}, out


@operation("obs-from-channel", refs={"channel": "channel"}, required=("channel",), produces="observable")
def _obs_from_channel(ctx: TaskContext, args: Dict[str, Any]):
    out = channels.observable_from_channel(ctx.resolve(args["channel"], "channel"))
    return {"observable": report_value(out)}, out


@operation("channel-from-obs", refs={"observable": "observable"}, required=("observable",), produces="channel")
def _channel_from_obs(ctx: TaskContext, args: Dict[str, Any]):
    out = channels.channel_from_observable(ctx.resolve(args["observable"], "observable"), ctx.tol)
    return {"channel": report_value(out)}, out


@operation("dilate", refs={"dilation": "dilation"}, required=("dilation",), produces="channel")
def _dilate(ctx: TaskContext, args: Dict[str, Any]):
    spec = ctx.resolve(args["dilation"], "dilation")
    ch = channels.channel_from_dilation(spec, ctx.tol)
    obs = channels.observable_from_channel(ch)
    return {
        "channel": report_value(ch),
        "observable": report_value(obs),
        "classification": observables.classify(obs, ctx.tol).as_dict(),
    }, ch


# Observables

@operation("classify", refs={"observable": "observable"}, required=("observable",))
def _classify(ctx: TaskContext, args: Dict[str, Any]):
    return observables.classify(ctx.resolve(args["observable"], "observable"), ctx.tol).as_dict(), None


@operation("pushforward", refs={"observable": "observable", "state": "state"}, required=("observable", "state"),
           produces="distribution")
def _pushforward(ctx: TaskContext, args: Dict[str, Any]):
    out = observables.pushforward(ctx.resolve(args["observable"], "observable"), ctx.resolve(args["state"], "state"))
    return {"distribution": report_value(out)}, out


@operation("characteristic-function", refs={"observable": "observable", "state": "state"},
           required=("observable", "state", "p"))
def _characteristic_function(ctx: TaskContext, args: Dict[str, Any]):
    obs = ctx.resolve(args["observable"], "observable")
    value = observables.characteristic_function(obs, ctx.resolve(args["state"], "state"), args["p"])
    return {"value": value}, None


@operation("postprocess", refs={"observable": "observable"}, required=("observable", "p"), produces="observable")
def _postprocess(ctx: TaskContext, args: Dict[str, Any]):
    out = observables.linear_postprocess(ctx.resolve(args["observable"], "observable"), args["p"])
    return {"observable": report_value(out)}, out


@operation("smear", refs={"observable": "observable", "distribution": "distribution"}, required=("observable",),
           produces="observable")
def _smear(ctx: TaskContext, args: Dict[str, Any]):
    obs = ctx.resolve(args["observable"], "observable")
    if "distribution" in args:
        out = observables.smear_with_distribution(obs, ctx.resolve(args["distribution"], "distribution"))
    else:
        out = observables.smear(obs, args["c"], args.get("d"), ctx.tol)
    return {"observable": report_value(out)}, out


@operation("marginal-direction", refs={"observable": "observable"}, required=("observable", "p"))
def _marginal_direction(ctx: TaskContext, args: Dict[str, Any]):
    return {"direction": observables.marginal_direction(ctx.resolve(args["observable"], "observable"), args["p"])}, None


@operation("decompose-covariant", refs={"observable": "observable"}, required=("observable",))
def _decompose_covariant(ctx: TaskContext, args: Dict[str, Any]):
    obs = ctx.resolve(args["observable"], "observable")
    dec = observables.decompose_covariant(obs, ctx.tol)
    recomposed = dec.recompose()
    error = max(max_abs(recomposed.a0 - obs.a0), max_abs(recomposed.b0 - obs.b0), max_abs(recomposed.v0 - obs.v0))
    return {
        "p": dec.p,
        "s": dec.s,
        "noise_c": dec.noise_c,
        "noise_d": dec.noise_d,
        "betas": dec.betas,
        "recomposition_error": error,
    }, None


@operation("transform-covariant", refs={"observable": "observable"}, required=("observable", "s"),
           produces="observable")
def _transform_covariant(ctx: TaskContext, args: Dict[str, Any]):
    out = observables.transform_covariant(ctx.resolve(args["observable"], "observable"), args["s"])
    return {"observable": report_value(out)}, out


@operation("sharp-split", refs={"observable": "observable"}, required=("observable",), produces="observable")
def _sharp_split(ctx: TaskContext, args: Dict[str, Any]):
    sharp, noise = observables.sharp_smearing_split(ctx.resolve(args["observable"], "observable"), ctx.tol)
    return {"sharp": report_value(sharp), "noise": report_value(noise)}, sharp


@operation("subspace-observable", required=("basis",), produces="observable")
def _subspace_observable(ctx: TaskContext, args: Dict[str, Any]):
    out = observables.observable_for_subspace(args["basis"])
    return {"observable": report_value(out)}, out


@operation("sample", refs={"distribution": "distribution", "observable": "observable", "state": "state"},
           required=("n",), produces="distribution")
def _sample(ctx: TaskContext, args: Dict[str, Any]):
    if "distribution" in args:
        dist = ctx.resolve(args["distribution"], "distribution")
    else:
        dist = observables.pushforward(ctx.resolve(args["observable"], "observable"), ctx.resolve(args["state"], "state"))
    samples = observables.sample_outcomes(dist, int(args["n"]), seed=ctx.seed)
    estimate = observables.estimate_distribution(samples)
    outputs = {"n": int(args["n"]), "analytic": report_value(dist), "estimate": report_value(estimate)}
    if args.get("include_samples", False):
        outputs["samples"] = samples
    return outputs, estimate


# Informational completeness

@operation("ic-single", refs={"observable": "observable"}, required=("observable",))
def _ic_single(ctx: TaskContext, args: Dict[str, Any]):
    return {"ic": infocomplete.ic_single(ctx.resolve(args["observable"], "observable"), ctx.tol)}, None


def _witness_report(pair: Optional[infocomplete.WitnessPair]) -> Optional[Dict[str, Any]]:
    if pair is None:
        return None
    return {
        "kind": pair.kind,
        "state_a": report_value(pair.state_a),
        "state_b": report_value(pair.state_b),
        "statistics_gap": pair.statistics_gap(),
        "separation": pair.separation(),
    }


@operation("ic-set", refs={"set": "observable_set"}, required=("set",))
def _ic_set(ctx: TaskContext, args: Dict[str, Any]):
    obs_set = ctx.resolve(args["set"], "observable_set")
    ident = infocomplete.state_identifiable(obs_set, ctx.tol)
    return {
        "ic": infocomplete.ic_finite_set(obs_set, ctx.tol),
        "span_dim": infocomplete.subspace_union_span(obs_set, ctx.tol).dimension,
        "gaussian_identifiable": ident.identifiable,
        "witness": _witness_report(infocomplete.gaussian_witness(obs_set, ctx.tol)),
    }, None


@operation("span", refs={"set": "observable_set"}, required=("set",))
def _span(ctx: TaskContext, args: Dict[str, Any]):
    span = infocomplete.subspace_union_span(ctx.resolve(args["set"], "observable_set"), ctx.tol)
    return {"dimension": span.dimension, "basis": span.basis}, None


@operation("witness", refs={"set": "observable_set"}, required=("set",))
def _witness(ctx: TaskContext, args: Dict[str, Any]):
    pair = infocomplete.gaussian_witness(ctx.resolve(args["set"], "observable_set"), ctx.tol)
    return {"witness": _witness_report(pair)}, None


@operation("state-identifiable", refs={"set": "observable_set"}, required=("set",))
def _state_identifiable(ctx: TaskContext, args: Dict[str, Any]):
    report = infocomplete.state_identifiable(ctx.resolve(args["set"], "observable_set"), ctx.tol)
    return {
        "identifiable": report.identifiable,
        "rank": report.rank,
        "mean_rank": report.mean_rank,
        "covariance_rank": report.covariance_rank,
        "n_parameters": report.n_parameters,
    }, None


@operation("family-directions", refs={"directions": "directions"}, required=("directions",),
           produces="directions")
def _family_directions(ctx: TaskContext, args: Dict[str, Any]):
    sample = ctx.resolve(args["directions"], "directions")
    return {"directions": sample.directions}, sample


@operation("coverage", refs={"directions": "directions", "set": "observable_set"})
def _coverage(ctx: TaskContext, args: Dict[str, Any]):
    if "directions" in args:
        sample = ctx.resolve(args["directions"], "directions")
    elif "set" in args:
        sample = infocomplete.observable_directions(ctx.resolve(args["set"], "observable_set"))
    else:
        raise ProblemValidationError("coverage needs 'directions' or 'set'")
    radius = infocomplete.direction_coverage(sample, args.get("probe_grid_size"))
    return {"covering_radius": radius, "n_directions": len(sample)}, None


@operation("reconstruct", refs={"observations": "observations"}, required=("observations",), produces="state")
def _reconstruct(ctx: TaskContext, args: Dict[str, Any]):
    pairs = []
    for item in args["observations"]:
        obs = ctx.resolve(item["observable"], "observable")
        if "distribution" in item:
            dist = ctx.resolve(item["distribution"], "distribution")
        else:
            dist = observables.pushforward(obs, ctx.resolve(item["state"], "state"))
        pairs.append((obs, dist))
    result = infocomplete.reconstruct_gaussian(pairs, ctx.tol)
    outputs = {
        "m": result.m,
        "v": result.v,
        "residual": result.residual,
        "rank": result.rank,
        "n_parameters": result.n_parameters,
        "nullspace_dim": result.nullspace_dim,
        "identifiable": result.identifiable,
        "physical": result.is_physical(ctx.tol),
    }
    state = result.to_state(ctx.tol) if result.identifiable and outputs["physical"] else None
    return outputs, state


# Bosonic observables

@operation("f0-eval", refs={"observable": "bosonic"}, required=("observable", "p"))
def _f0_eval(ctx: TaskContext, args: Dict[str, Any]):
    return {"value": bosonic.f0_eval(ctx.resolve(args["observable"], "bosonic"), args["p"])}, None


@operation("bosonic-probe", refs={"observables": "*bosonic"}, required=("observables",))
def _bosonic_probe(ctx: TaskContext, args: Dict[str, Any]):
    members = [ctx.resolve(ref, "bosonic") for ref in args["observables"]]
    grid = GridSchema.model_validate(args.get("grid", {})).to_domain()
    threshold = args.get("threshold")
    probes = []
    for obs in members:
        probe = bosonic.support_probe(obs, grid, threshold)
        radii = probe.crossing_radii
        probes.append({
            "family": obs.f0.kind,
            "fraction_nonzero": probe.fraction_nonzero,
            "hole_radius": probe.hole_radius,
            "zero_crossings": int(len(radii)),
            "crossing_radius_min": float(radii.min()) if radii.size else None,
            "crossing_radius_max": float(radii.max()) if radii.size else None,
        })
    verdict = bosonic.ic_bosonic_verdict(members, grid, threshold)
    return {"probes": probes, "verdict": verdict.verdict, "evidence": verdict.evidence}, None


# Fock oracle

@operation("ladder-ops")
def _ladder_ops(ctx: TaskContext, args: Dict[str, Any]):
    cutoff = int(args.get("cutoff", ctx.options.cutoff or settings.FOCK_CUTOFF))
    _, _, q, p = fock_oracle.ladder_ops(cutoff)
    defect = q @ p - p @ q - 1j * np.eye(cutoff)
    return {"cutoff": cutoff, "commutator_defect_bulk": max_abs(defect[:-1, :-1]),
            "commutator_defect_last": complex(defect[-1, -1])}, None


@operation("fock-weyl-matrix", required=("x",))
def _fock_weyl_matrix(ctx: TaskContext, args: Dict[str, Any]):
    w = fock_oracle.fock_weyl_matrix(args["x"], args.get("cutoff", ctx.options.cutoff))
    return {"re": w.real, "im": w.imag}, None


@operation("oracle-weyl", refs={"rho": "fock"}, required=("rho", "x"))
def _oracle_weyl(ctx: TaskContext, args: Dict[str, Any]):
    rho = ctx.resolve(args["rho"], "fock")
    return {
        "value": fock_oracle.oracle_weyl_transform(rho, args["x"]),
        "truncation_weight": fock_oracle.truncation_diagnostic(rho, args["x"]),
    }, None


@operation("oracle-pushforward", refs={"observable": "observable", "rho": "fock"}, required=("observable", "rho", "p"))
def _oracle_pushforward(ctx: TaskContext, args: Dict[str, Any]):
    obs = ctx.resolve(args["observable"], "observable")
    return {"value": fock_oracle.oracle_pushforward_char(obs, ctx.resolve(args["rho"], "fock"), args["p"])}, None


@operation("weyl-relation", required=("x", "y"))
def _weyl_relation(ctx: TaskContext, args: Dict[str, Any]):
    defect = fock_oracle.weyl_relation_defect(args["x"], args["y"], args.get("cutoff", ctx.options.cutoff),
                                              args.get("block"))
    return {"defect": defect}, None


@operation("oracle-check")
def _oracle_check(ctx: TaskContext, args: Dict[str, Any]):
    report = fock_oracle.oracle_check(cutoff=args.get("cutoff", ctx.options.cutoff))
    return {"cutoff": report.cutoff, "max_error": report.max_error, "rows": list(report.rows)}, None


def _check_ref(ctx: TaskContext, value: Any, kind: str, defined: Dict[str, str]) -> None:
    if kind.startswith("*"):
        if not isinstance(value, list) or not value:
            raise ProblemValidationError(f"Expected a nonempty list of {kind[1:]} references")
        for item in value:
            _check_ref(ctx, item, kind[1:], defined)
        return
    if kind == "observations":
        if not isinstance(value, list) or not value:
            raise ProblemValidationError("observations must be a nonempty list")
        for item in value:
            if not isinstance(item, dict) or "observable" not in item or not ({"distribution", "state"} & set(item)):
                raise ProblemValidationError("Each observation needs 'observable' and 'distribution' or 'state'")
            _check_ref(ctx, item["observable"], "observable", defined)
            if "distribution" in item:
                _check_ref(ctx, item["distribution"], "distribution", defined)
            else:
                _check_ref(ctx, item["state"], "state", defined)
        return
    if kind == "observable_set" and isinstance(value, list):
        _check_ref(ctx, value, "*observable", defined)
        return
    if isinstance(value, str):
        if value in defined:
            if defined[value] != kind:
                raise ProblemValidationError(f"Output '{value}' is a {defined[value]}, expected {kind}")
            return
        entity = ctx.schema(value, kind)
        if kind == "observable_set":
            _check_ref(ctx, entity.members, "*observable", defined)
        if kind == "bosonic" and isinstance(entity.sigma, str):
            _check_ref(ctx, entity.sigma, "fock", defined)
        return
    ctx.schema(value, kind)


def validate_problem(problem: ProblemFile) -> None:
    """
    Check ops, required arguments and every reference before anything runs

    Entities are built when a task first uses them; one that cannot be built
    (an unphysical explicit state, say) raises ProblemValidationError then.

    Raises:
        ProblemValidationError: On the first unknown op, missing argument or
            unresolved reference
    """
    ctx = TaskContext(entities=dict(problem.entities), options=RunOptions())
    defined: Dict[str, str] = {}
    for index, task in enumerate(problem.tasks):
        op = OPERATIONS.get(task.op)
        if op is None:
            raise ProblemValidationError(f"Task {index}: unknown op '{task.op}'")
        missing = [name for name in op.required if name not in task.args]
        if missing:
            raise ProblemValidationError(f"Task {index} ({task.op}): missing arguments {missing}")
        for name, kind in op.refs.items():
            if name in task.args:
                try:
                    _check_ref(ctx, task.args[name], kind, defined)
                except ProblemValidationError as exc:
                    raise ProblemValidationError(f"Task {index} ({task.op}), argument '{name}': {exc}") from exc
        if task.output_name is not None:
            if op.produces is None:
                raise ProblemValidationError(f"Task {index}: op '{task.op}' produces no storable output")
            defined[task.output_name] = op.produces


def _elapsed(started: float, options: RunOptions) -> Optional[float]:
    """Wall-clock seconds since ``started``, or None when timing is off"""
    return time.perf_counter() - started if options.timing else None


def run_problem(problem: ProblemFile, options: Optional[RunOptions] = None,
                only_op: Optional[str] = None) -> Dict[str, Any]:
    """
    Validate and execute a problem file

    Only tasks whose op equals ``only_op`` run when it is given. Returns the
    report; raises TaskExecutionError carrying the partial report when a task
    fails.
    """
    options = RunOptions() if options is None else options
    validate_problem(problem)
    ctx = TaskContext(entities=dict(problem.entities), options=options)
    report: Dict[str, Any] = {
        "version": problem.version,
        "tool": {"name": settings.APP_NAME, "version": settings.APP_VERSION},
        "options": {"seed": options.seed, "tol": options.tol, "cutoff": options.cutoff},
        "status": "ok",
        "tasks": [],
    }
    for index, task in enumerate(problem.tasks):
        if only_op is not None and task.op != only_op:
            continue
        op = OPERATIONS[task.op]
        ctx.index = index
        entry: Dict[str, Any] = {
            "index": index,
            "op": task.op,
            "output_name": task.output_name,
            "inputs_digest": digest({"op": task.op, "args": ctx.describe(task.args)}),
        }
        started = time.perf_counter()
        try:
            outputs, value = op.handler(ctx, task.args)
        except ProblemValidationError:
            raise
        except (GaussianToolkitError, ValueError, KeyError, TypeError, np.linalg.LinAlgError) as exc:
            logger.error(f"Task {index} ({task.op}) failed: {exc}")
            entry["error"] = {"type": type(exc).__name__, "message": str(exc)}
            entry["timing_s"] = _elapsed(started, options)
            report["tasks"].append(entry)
            report["status"] = "failed"
            raise TaskExecutionError(str(exc), index, task.op, partial_report=report) from exc
        entry["outputs"] = to_jsonable(outputs)
        entry["timing_s"] = _elapsed(started, options)
        if task.output_name is not None and value is not None:
            ctx.outputs[task.output_name] = (op.produces, value)
        report["tasks"].append(entry)
        logger.info(f"Task {index} ({task.op}) done")
    return report
