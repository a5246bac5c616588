"""Built-in examples with analytic field data, torus actions, moment data
and frozen expected results.

All evaluators are chart-local and vectorized.  Sphere fields are written
in the band chart (theta, z) and the two cap charts (x, y); product
manifolds evaluate factor fields on coordinate blocks.  Expected values
carry no derivation here: they are reproduced independently by
scripts/derive_expectations.py.
"""

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Optional

import numpy as np

from . import fiber, fields
from .actions import ActionSpec, MomentData
from .manifold import (SampledManifold, box_manifold, product_manifold,
                       sphere_manifold, torus_manifold)

NAMES = (
    "sphere_rotation",
    "product_spheres_T2",
    "sphere_bshift",
    "twisted_sphere_torus",
    "nonintegrable_control",
    "broken_moment_control",
)

# generic direction for Morse sweeps on rank-2 torus actions
GENERIC_XI = (1.0, 0.6180339887498949)


@dataclass(frozen=True)
class MorseCase:
    xi: tuple
    components: tuple  # sorted (index, coindex, nullity) per component


@dataclass(frozen=True)
class SliceCase:
    a_partial: tuple
    regular: bool = True
    n_components: int = 0
    components: tuple = ()  # sorted (index, coindex, nullity)


@dataclass(frozen=True)
class Expected:
    hamiltonian: bool
    integrable: bool
    fixed_dims: tuple = ()
    fixed_moment_values: tuple = ()
    hull_vertices: tuple = ()
    morse_cases: tuple = ()
    slice_cases: tuple = ()


@dataclass
class Example:
    name: str
    description: str
    resolution: int
    manifold: SampledManifold
    structure: Callable               # (chart, uv) -> (N, 2d, 2d)
    metric: Callable                  # (chart, uv) -> (N, d, d)
    action: ActionSpec
    moment: MomentData
    expected: Expected
    omega: Optional[Callable] = None  # 2-form components, when symplectic-type
    bfield: Optional[Callable] = None

    @property
    def twist(self) -> Optional[Callable]:
        return self.moment.twist


# ---------------------------------------------------------------------------
# sphere fields (charts: band, cap_north, cap_south)


def sphere_height(chart, uv):
    if chart == "band":
        return uv[:, 1]
    f = np.sqrt(1.0 - uv[:, 0] ** 2 - uv[:, 1] ** 2)
    return f if chart == "cap_north" else -f


def sphere_height_gradient(chart, uv):
    if chart == "band":
        out = np.zeros((len(uv), 2))
        out[:, 1] = 1.0
        return out
    z = sphere_height(chart, uv)
    return np.stack([-uv[:, 0] / z, -uv[:, 1] / z], axis=1)


def sphere_area_form(chart, uv):
    out = np.zeros((len(uv), 2, 2))
    if chart == "band":
        out[:, 0, 1] = 1.0
        out[:, 1, 0] = -1.0
    else:
        inv_z = 1.0 / sphere_height(chart, uv)
        out[:, 0, 1] = inv_z
        out[:, 1, 0] = -inv_z
    return out


def sphere_round_metric(chart, uv):
    out = np.zeros((len(uv), 2, 2))
    if chart == "band":
        z = uv[:, 1]
        out[:, 0, 0] = 1.0 - z ** 2
        out[:, 1, 1] = 1.0 / (1.0 - z ** 2)
    else:
        dz = sphere_height_gradient(chart, uv)
        out[:, 0, 0] = 1.0 + dz[:, 0] ** 2
        out[:, 1, 1] = 1.0 + dz[:, 1] ** 2
        out[:, 0, 1] = out[:, 1, 0] = dz[:, 0] * dz[:, 1]
    return out


def sphere_rotation_field(chart, uv):
    out = np.zeros((len(uv), 2))
    if chart == "band":
        out[:, 0] = 1.0
    else:
        out[:, 0] = -uv[:, 1]
        out[:, 1] = uv[:, 0]
    return out


def sphere_rotate(angle, chart, uv):
    out = np.array(uv, dtype=float, copy=True)
    if chart == "band":
        out[:, 0] = np.mod(out[:, 0] + angle, 2.0 * np.pi)
    else:
        c, s = math.cos(angle), math.sin(angle)
        out = uv @ np.array([[c, s], [-s, c]])  # row vectors: R(angle) p
    return out


def sphere_rotate_jacobian(angle, chart, uv):
    if chart == "band":
        return np.broadcast_to(np.eye(2), (len(uv), 2, 2))
    c, s = math.cos(angle), math.sin(angle)
    return np.broadcast_to(np.array([[c, -s], [s, c]]), (len(uv), 2, 2))


# ---------------------------------------------------------------------------
# flat torus fields (chart: torus, angle coordinates)


def torus_area_form(chart, uv):
    out = np.zeros((len(uv), 2, 2))
    out[:, 0, 1] = 1.0
    out[:, 1, 0] = -1.0
    return out


def torus_flat_metric(chart, uv):
    return np.broadcast_to(np.eye(2), (len(uv), 2, 2)).copy()


# ---------------------------------------------------------------------------
# assembly helpers


def _split(chart):
    return chart.split("|", 1)


def block_two_form(fa, fb, da):
    def f(chart, uv):
        ca, cb = _split(chart)
        d = uv.shape[1]
        out = np.zeros((len(uv), d, d))
        out[:, :da, :da] = fa(ca, uv[:, :da])
        out[:, da:, da:] = fb(cb, uv[:, da:])
        return out
    return f


def block_metric(fa, fb, da):
    return block_two_form(fa, fb, da)  # same block-diagonal layout


def structure_from_omega(omega):
    def f(chart, uv):
        return fiber.from_symplectic(fields.form_to_map(omega(chart, uv)))
    return f


def sheared_structure(omega, bform):
    def f(chart, uv):
        j = fiber.from_symplectic(fields.form_to_map(omega(chart, uv)))
        return fiber.b_shift(j, fields.form_to_map(bform(chart, uv)))
    return f


def fill_three_form(out, i, j, k, value):
    """Set the (i, j, k) component of a batched 3-form, antisymmetrized."""
    for (a, b, c), sign in (((i, j, k), 1.0), ((j, k, i), 1.0),
                            ((k, i, j), 1.0), ((j, i, k), -1.0),
                            ((i, k, j), -1.0), ((k, j, i), -1.0)):
        out[:, a, b, c] = sign * value


def _product_factor_resolution(resolution: int) -> int:
    return max(6, int(round(8.0 * math.sqrt(resolution / 64.0))))


def _torus_axis_count(sphere_res: int) -> int:
    # half the sphere's angular sample density keeps 4d products affordable
    return max(8, int(round(math.pi * sphere_res / 1.5)))


# ---------------------------------------------------------------------------
# example builders


def _sphere_action() -> ActionSpec:
    def generators(chart, uv):
        return sphere_rotation_field(chart, uv)[:, None, :]

    def act(theta, chart, uv):
        return sphere_rotate(2.0 * np.pi * np.asarray(theta)[0], chart, uv)

    def act_jacobian(theta, chart, uv):
        return sphere_rotate_jacobian(
            2.0 * np.pi * np.asarray(theta)[0], chart, uv)

    return ActionSpec(m=1, generators=generators, act=act,
                      act_jacobian=act_jacobian)


def _height_moment(scale_alpha: float = 0.0) -> MomentData:
    def moment(chart, uv):
        return sphere_height(chart, uv)[:, None]

    def one_forms(chart, uv):
        return scale_alpha * sphere_height_gradient(chart, uv)[:, None, :]

    def d_moment(chart, uv):
        return sphere_height_gradient(chart, uv)[:, None, :]

    return MomentData(m=1, moment=moment, one_forms=one_forms,
                      twist=None, d_moment=d_moment)


def _build_sphere_rotation(resolution: int) -> Example:
    expected = Expected(
        hamiltonian=True, integrable=True,
        fixed_dims=(0, 0),
        fixed_moment_values=((-1.0,), (1.0,)),
        hull_vertices=((-1.0,), (1.0,)),
        morse_cases=(MorseCase(xi=(1.0,), components=((0, 2, 0), (2, 0, 0))),),
    )
    return Example(
        name="sphere_rotation",
        description="unit sphere with its area form; circle rotation about "
                    "the vertical axis, height moment map",
        resolution=resolution,
        manifold=sphere_manifold(resolution),
        structure=structure_from_omega(sphere_area_form),
        metric=sphere_round_metric,
        action=_sphere_action(),
        moment=_height_moment(),
        expected=expected,
        omega=sphere_area_form,
    )


def _build_sphere_bshift(resolution: int) -> Example:
    shift_scale = 0.5

    def bform(chart, uv):
        return shift_scale * sphere_area_form(chart, uv)

    base = _build_sphere_rotation(resolution)
    moment = _height_moment(scale_alpha=shift_scale)
    expected = Expected(
        hamiltonian=True, integrable=True,
        fixed_dims=base.expected.fixed_dims,
        fixed_moment_values=base.expected.fixed_moment_values,
        hull_vertices=base.expected.hull_vertices,
        morse_cases=base.expected.morse_cases,
    )
    return Example(
        name="sphere_bshift",
        description="sphere rotation sheared by an invariant closed 2-form; "
                    "the moment one-form picks up the contraction term",
        resolution=resolution,
        manifold=base.manifold,
        structure=sheared_structure(sphere_area_form, bform),
        metric=sphere_round_metric,
        action=base.action,
        moment=moment,
        expected=expected,
        omega=sphere_area_form,
        bfield=bform,
    )


def _build_broken_moment(resolution: int) -> Example:
    base = _build_sphere_rotation(resolution)

    def moment(chart, uv):
        z = sphere_height(chart, uv)
        return (z + 0.1 * z ** 2)[:, None]

    def d_moment(chart, uv):
        z = sphere_height(chart, uv)
        dz = sphere_height_gradient(chart, uv)
        return ((1.0 + 0.2 * z)[:, None] * dz)[:, None, :]

    md = MomentData(m=1, moment=moment,
                    one_forms=lambda chart, uv: np.zeros((len(uv), 1, 2)),
                    twist=None, d_moment=d_moment)
    expected = Expected(
        hamiltonian=False, integrable=True,
        fixed_dims=(0, 0),
        fixed_moment_values=((-0.9,), (1.1,)),
        hull_vertices=((-0.9,), (1.1,)),
    )
    return Example(
        name="broken_moment_control",
        description="sphere rotation with a perturbed moment map; negative "
                    "control for the moment condition",
        resolution=resolution,
        manifold=base.manifold,
        structure=base.structure,
        metric=base.metric,
        action=base.action,
        moment=md,
        expected=expected,
        omega=base.omega,
    )


def _build_product_spheres(resolution: int) -> Example:
    k = _product_factor_resolution(resolution)
    factor = sphere_manifold(k)
    omega = block_two_form(sphere_area_form, sphere_area_form, 2)
    metric = block_metric(sphere_round_metric, sphere_round_metric, 2)

    def generators(chart, uv):
        ca, cb = _split(chart)
        out = np.zeros((len(uv), 2, 4))
        out[:, 0, :2] = sphere_rotation_field(ca, uv[:, :2])
        out[:, 1, 2:] = sphere_rotation_field(cb, uv[:, 2:])
        return out

    def act(theta, chart, uv):
        ca, cb = _split(chart)
        th = 2.0 * np.pi * np.asarray(theta)
        return np.concatenate([sphere_rotate(th[0], ca, uv[:, :2]),
                               sphere_rotate(th[1], cb, uv[:, 2:])], axis=1)

    def act_jacobian(theta, chart, uv):
        ca, cb = _split(chart)
        th = 2.0 * np.pi * np.asarray(theta)
        out = np.zeros((len(uv), 4, 4))
        out[:, :2, :2] = sphere_rotate_jacobian(th[0], ca, uv[:, :2])
        out[:, 2:, 2:] = sphere_rotate_jacobian(th[1], cb, uv[:, 2:])
        return out

    def moment(chart, uv):
        ca, cb = _split(chart)
        return np.stack([sphere_height(ca, uv[:, :2]),
                         sphere_height(cb, uv[:, 2:])], axis=1)

    def d_moment(chart, uv):
        ca, cb = _split(chart)
        out = np.zeros((len(uv), 2, 4))
        out[:, 0, :2] = sphere_height_gradient(ca, uv[:, :2])
        out[:, 1, 2:] = sphere_height_gradient(cb, uv[:, 2:])
        return out

    md = MomentData(m=2, moment=moment,
                    one_forms=lambda chart, uv: np.zeros((len(uv), 2, 4)),
                    twist=None, d_moment=d_moment)
    corners = ((-1.0, -1.0), (-1.0, 1.0), (1.0, -1.0), (1.0, 1.0))
    expected = Expected(
        hamiltonian=True, integrable=True,
        fixed_dims=(0, 0, 0, 0),
        fixed_moment_values=corners,
        hull_vertices=corners,
        morse_cases=(
            MorseCase(xi=GENERIC_XI,
                      components=((0, 4, 0), (2, 2, 0), (2, 2, 0), (4, 0, 0))),
            MorseCase(xi=(1.0, 0.0),
                      components=((0, 2, 2), (2, 0, 2))),
        ),
        slice_cases=(
            SliceCase(a_partial=(0.0,), n_components=2,
                      components=((0, 2, 1), (2, 0, 1))),
            SliceCase(a_partial=(0.5,), n_components=2,
                      components=((0, 2, 1), (2, 0, 1))),
            SliceCase(a_partial=(1.0,), regular=False),
        ),
    )
    return Example(
        name="product_spheres_T2",
        description="product of two unit spheres; 2-torus rotation with "
                    "moment map (z1, z2)",
        resolution=resolution,
        manifold=product_manifold(factor, factor),
        structure=structure_from_omega(omega),
        metric=metric,
        action=ActionSpec(m=2, generators=generators, act=act,
                          act_jacobian=act_jacobian),
        moment=md,
        expected=expected,
        omega=omega,
    )


def _build_twisted_sphere_torus(resolution: int) -> Example:
    k = _product_factor_resolution(resolution)
    sphere = sphere_manifold(k)
    torus = torus_manifold(_torus_axis_count(k))
    omega = block_two_form(sphere_area_form, torus_area_form, 2)
    metric = block_metric(sphere_round_metric, torus_flat_metric, 2)

    def bform(chart, uv):
        ca, _ = _split(chart)
        z = sphere_height(ca, uv[:, :2])
        out = np.zeros((len(uv), 4, 4))
        out[:, 2, 3] = z
        out[:, 3, 2] = -z
        return out

    def twist(chart, uv):
        # H = -d(b) = -dz ^ dt1 ^ dt2; the shear of an untwisted structure
        # by b is integrable exactly for this sign (see the oracle script)
        ca, _ = _split(chart)
        out = np.zeros((len(uv), 4, 4, 4))
        dz = sphere_height_gradient(ca, uv[:, :2])
        fill_three_form(out, 0, 2, 3, -dz[:, 0])
        fill_three_form(out, 1, 2, 3, -dz[:, 1])
        return out

    def generators(chart, uv):
        ca, _ = _split(chart)
        out = np.zeros((len(uv), 1, 4))
        out[:, 0, :2] = sphere_rotation_field(ca, uv[:, :2])
        return out

    def act(theta, chart, uv):
        ca, _ = _split(chart)
        angle = 2.0 * np.pi * np.asarray(theta)[0]
        return np.concatenate([sphere_rotate(angle, ca, uv[:, :2]),
                               uv[:, 2:]], axis=1)

    def act_jacobian(theta, chart, uv):
        ca, _ = _split(chart)
        angle = 2.0 * np.pi * np.asarray(theta)[0]
        out = np.zeros((len(uv), 4, 4))
        out[:, :2, :2] = sphere_rotate_jacobian(angle, ca, uv[:, :2])
        out[:, 2, 2] = out[:, 3, 3] = 1.0
        return out

    def moment(chart, uv):
        ca, _ = _split(chart)
        return sphere_height(ca, uv[:, :2])[:, None]

    def d_moment(chart, uv):
        ca, _ = _split(chart)
        out = np.zeros((len(uv), 1, 4))
        out[:, 0, :2] = sphere_height_gradient(ca, uv[:, :2])
        return out

    md = MomentData(m=1, moment=moment,
                    one_forms=lambda chart, uv: np.zeros((len(uv), 1, 4)),
                    twist=twist, d_moment=d_moment)
    expected = Expected(
        hamiltonian=True, integrable=True,
        fixed_dims=(2, 2),
        fixed_moment_values=((-1.0,), (1.0,)),
        hull_vertices=((-1.0,), (1.0,)),
        morse_cases=(MorseCase(xi=(1.0,), components=((0, 2, 2), (2, 0, 2))),),
    )
    return Example(
        name="twisted_sphere_torus",
        description="sphere x flat torus sheared by a non-closed invariant "
                    "2-form; nonzero closed twist, circle rotation on the "
                    "sphere factor",
        resolution=resolution,
        manifold=product_manifold(sphere, torus),
        structure=sheared_structure(omega, bform),
        metric=metric,
        action=ActionSpec(m=1, generators=generators, act=act,
                          act_jacobian=act_jacobian),
        moment=md,
        expected=expected,
        omega=omega,
        bfield=bform,
    )


def _build_nonintegrable(resolution: int) -> Example:
    n_axis = max(5, int(round(resolution / 12)))

    def omega(chart, uv):
        out = np.zeros((len(uv), 4, 4))
        out[:, 0, 1] = 1.0
        out[:, 1, 0] = -1.0
        out[:, 2, 3] = 1.0 + uv[:, 0]
        out[:, 3, 2] = -(1.0 + uv[:, 0])
        return out

    def metric(chart, uv):
        return np.broadcast_to(np.eye(4), (len(uv), 4, 4)).copy()

    action = ActionSpec(
        m=1,
        generators=lambda chart, uv: np.zeros((len(uv), 1, 4)),
        act=lambda theta, chart, uv: np.array(uv, copy=True),
        act_jacobian=lambda theta, chart, uv: np.broadcast_to(
            np.eye(4), (len(uv), 4, 4)).copy(),
    )
    md = MomentData(m=1,
                    moment=lambda chart, uv: np.zeros((len(uv), 1)),
                    one_forms=lambda chart, uv: np.zeros((len(uv), 1, 4)),
                    twist=None,
                    d_moment=lambda chart, uv: np.zeros((len(uv), 1, 4)))
    expected = Expected(hamiltonian=True, integrable=False,
                        fixed_dims=(4,),
                        fixed_moment_values=((0.0,),),
                        hull_vertices=((0.0,),))
    return Example(
        name="nonintegrable_control",
        description="4-dimensional box chart with a non-closed symplectic "
                    "form; positive control for the integrability detector",
        resolution=resolution,
        manifold=box_manifold(n_axis, dim=4),
        structure=structure_from_omega(omega),
        metric=metric,
        action=action,
        moment=md,
        expected=expected,
        omega=omega,
    )


_BUILDERS = {
    "sphere_rotation": _build_sphere_rotation,
    "product_spheres_T2": _build_product_spheres,
    "sphere_bshift": _build_sphere_bshift,
    "twisted_sphere_torus": _build_twisted_sphere_torus,
    "nonintegrable_control": _build_nonintegrable,
    "broken_moment_control": _build_broken_moment,
}


@lru_cache(maxsize=None)
def _load_default_resolution(name: str) -> Example:
    return _BUILDERS[name](64)


def load(name: str, resolution: int = 64) -> Example:
    """Build a catalog example; the default resolution is cached."""
    if name not in _BUILDERS:
        raise ValueError(
            f"unknown example {name!r}; available: {', '.join(NAMES)}")
    if resolution == 64:
        return _load_default_resolution(name)
    return _BUILDERS[name](resolution)


DESCRIPTIONS = {
    "sphere_rotation": "unit sphere with its area form; circle rotation "
                       "about the vertical axis, height moment map",
    "product_spheres_T2": "product of two unit spheres; 2-torus rotation "
                          "with moment map (z1, z2)",
    "sphere_bshift": "sphere rotation sheared by an invariant closed "
                     "2-form; the moment one-form picks up the contraction "
                     "term",
    "twisted_sphere_torus": "sphere x flat torus sheared by a non-closed "
                            "invariant 2-form; nonzero closed twist, circle "
                            "rotation on the sphere factor",
    "nonintegrable_control": "4-dimensional box chart with a non-closed "
                             "symplectic form; positive control for the "
                             "integrability detector",
    "broken_moment_control": "sphere rotation with a perturbed moment map; "
                             "negative control for the moment condition",
}


def describe() -> list:
    """(name, description) pairs for the catalog listing."""
    return [(name, DESCRIPTIONS[name]) for name in NAMES]
