"""Kinematics, Jacobian, and force mapping for the inverted Delta mechanism.

Conventions
-----------
Device frame: origin at the base-plate center, +z toward the finger pad,
+y toward the fingertip. Lengths in mm, joint angles in rad, forces in N,
torques in N*m. Arm i lies in the vertical plane through azimuth
``arm_azimuths[i]``; its servo angle is measured from the base plane,
positive lifting the knee toward +z.

The mechanism is mounted inverted: the moving platform (and its ball tactor)
sits above the base plate, so the usable workspace is the +z branch of the
kinematics. All functions here are pure and thread-safe.
"""

from dataclasses import dataclass, field
import math

import numpy as np

from .errors import (
    GeometryInfeasible,
    JointLimit,
    NoIntersection,
    Singular,
    TorqueLimitExceeded,
    Unreachable,
)

# 0.2 kgf*cm servo limit converted once: 0.2 * 9.80665 / 100 N*m
TORQUE_LIMIT_NM = 0.0196133

# Jacobian condition number past this counts as singular
SINGULARITY_COND = 1e8

_Z = np.array([0.0, 0.0, 1.0])


@dataclass(frozen=True)
class DeltaGeometry:
    """Link lengths and joint layout. All lengths in mm, azimuths/limits in deg."""

    base_joint_radius: float = 18.0
    platform_joint_radius: float = 6.0
    upper_arm_length: float = 13.0
    rod_length: float = 28.0
    arm_azimuths: tuple = (0.0, 120.0, 240.0)
    joint_angle_limits: tuple = (-85.0, 85.0)
    inverted: bool = True

    def __post_init__(self):
        for name in ("base_joint_radius", "platform_joint_radius",
                     "upper_arm_length", "rod_length"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.rod_length <= self.upper_arm_length:
            raise ValueError("rod_length must exceed upper_arm_length")
        az = self.arm_azimuths
        if len(az) != 3 or not all(
            math.isclose((az[(i + 1) % 3] - az[i]) % 360.0, 120.0, abs_tol=1e-9)
            for i in range(3)
        ):
            raise ValueError("arm azimuths must be 120 deg apart")
        lo, hi = self.joint_angle_limits
        if lo >= hi:
            raise ValueError("joint_angle_limits must be ordered")

    @property
    def azimuths_rad(self):
        return tuple(math.radians(a) for a in self.arm_azimuths)

    @property
    def limits_rad(self):
        lo, hi = self.joint_angle_limits
        return math.radians(lo), math.radians(hi)


@dataclass(frozen=True)
class WorkspaceSpec:
    """Cylindrical workspace: radius around the device axis, z travel below
    the contact plane (the finger-pad surface)."""

    radius: float = 6.5
    z_travel: float = 8.0
    contact_plane_z: float = 27.0

    def __post_init__(self):
        if self.radius <= 0 or self.z_travel <= 0:
            raise ValueError("radius and z_travel must be positive")
        # the 5 mm hover band must exist inside the travel
        if self.z_travel < 5.0:
            raise ValueError("z_travel must cover the 5 mm hover band")

    @property
    def z_min(self):
        return self.contact_plane_z - self.z_travel

    def contains(self, pose, penetration_allowance: float = 0.0) -> bool:
        """Cylinder membership. ``penetration_allowance`` admits poses up to
        that many mm above the contact plane (used for contact rendering)."""
        x, y, z = float(pose[0]), float(pose[1]), float(pose[2])
        if math.hypot(x, y) > self.radius + 1e-9:
            return False
        return self.z_min - 1e-9 <= z <= self.contact_plane_z + penetration_allowance + 1e-9


def workspace_contains(spec: WorkspaceSpec, pose, penetration_allowance: float = 0.0) -> bool:
    return spec.contains(pose, penetration_allowance)


def _arm_frames(geom: DeltaGeometry):
    """Per-arm radial and tangential unit vectors."""
    out = []
    for az in geom.azimuths_rad:
        u = np.array([math.cos(az), math.sin(az), 0.0])
        t = np.array([-math.sin(az), math.cos(az), 0.0])
        out.append((u, t))
    return out


def inverse_kinematics(geom: DeltaGeometry, pose) -> np.ndarray:
    """Closed-form per-arm IK.

    For arm i the wrist point is P + Rp*u_i; relative to the shoulder at
    Rb*u_i it has radial component rho, tangential component tau and height
    zeta. The rod constraint reduces to a circle-circle intersection in the
    arm plane with effective rod length sqrt(Lr^2 - tau^2). The knee branch
    with the larger radial coordinate (knees outward) is returned; this is
    consistent with forward_kinematics' +z branch everywhere inside the
    shipped workspace.

    Raises Unreachable if any arm's discriminant is negative, JointLimit if
    a solution falls outside the servo limits.
    """
    p = np.asarray(pose, dtype=float)
    if p.shape != (3,) or not np.all(np.isfinite(p)):
        raise ValueError("pose must be a finite 3-vector")
    la, lr = geom.upper_arm_length, geom.rod_length
    lo, hi = geom.limits_rad
    thetas = np.empty(3)
    for i, (u, t) in enumerate(_arm_frames(geom)):
        q = p + geom.platform_joint_radius * u - geom.base_joint_radius * u
        rho = float(q @ u)
        tau = float(q @ t)
        zeta = float(q[2])
        leff_sq = lr * lr - tau * tau
        if leff_sq <= 0:
            raise Unreachable(f"arm {i}: tangential offset exceeds rod length")
        d_sq = rho * rho + zeta * zeta
        d = math.sqrt(d_sq)
        if d < 1e-12:
            raise Unreachable(f"arm {i}: wrist coincides with shoulder")
        # circle (0,0,r=la) vs circle ((rho,zeta), r=leff)
        a = (la * la - leff_sq + d_sq) / (2.0 * d)
        h_sq = la * la - a * a
        if h_sq < 0:
            raise Unreachable(f"arm {i}: pose outside reach")
        h = math.sqrt(h_sq)
        # two knee candidates; keep the one farther out radially
        kx1 = (a * rho - h * zeta) / d
        kz1 = (a * zeta + h * rho) / d
        kx2 = (a * rho + h * zeta) / d
        kz2 = (a * zeta - h * rho) / d
        kx, kz = (kx1, kz1) if kx1 >= kx2 else (kx2, kz2)
        theta = math.atan2(kz, kx)
        if not (lo - 1e-12 <= theta <= hi + 1e-12):
            raise JointLimit(
                f"arm {i}: {math.degrees(theta):.2f} deg outside "
                f"[{geom.joint_angle_limits[0]}, {geom.joint_angle_limits[1]}]"
            )
        thetas[i] = theta
    return thetas


def _knee(geom: DeltaGeometry, i: int, theta: float, u) -> np.ndarray:
    la = geom.upper_arm_length
    return geom.base_joint_radius * u + la * (math.cos(theta) * u + math.sin(theta) * _Z)


def forward_kinematics(geom: DeltaGeometry, angles) -> np.ndarray:
    """Three-sphere trilateration.

    Each rod constrains the platform center P to a sphere of radius
    rod_length around the virtual center K_i - Rp*u_i (knee shifted inward
    by the platform joint radius). Returns the +z intersection branch.

    Raises NoIntersection when the spheres miss, Singular when the three
    centers are (near) collinear.
    """
    th = np.asarray(angles, dtype=float)
    if th.shape != (3,):
        raise ValueError("angles must be a 3-vector")
    lo, hi = geom.limits_rad
    if np.any(th < lo - 1e-12) or np.any(th > hi + 1e-12):
        raise JointLimit("angles outside joint limits")
    frames = _arm_frames(geom)
    centers = [
        _knee(geom, i, th[i], frames[i][0]) - geom.platform_joint_radius * frames[i][0]
        for i in range(3)
    ]
    c0, c1, c2 = centers
    e1 = c1 - c0
    e2 = c2 - c0
    n = np.cross(e1, e2)
    n_norm = np.linalg.norm(n)
    if n_norm < 1e-9:
        raise Singular("sphere centers are collinear")
    nn = n / n_norm
    # pairwise sphere subtraction (equal radii cancel the quadratic terms)
    # gives two planes; intersecting them with the centers' plane yields the
    # foot point of the radical line, from which the two solutions are
    # symmetric along nn
    M = np.vstack([2.0 * e1, 2.0 * e2, nn])
    rhs = np.array([c1 @ c1 - c0 @ c0, c2 @ c2 - c0 @ c0, nn @ c0])
    p0 = np.linalg.solve(M, rhs)
    w = p0 - c0
    h_sq = geom.rod_length ** 2 - float(w @ w)
    if h_sq < 0:
        raise NoIntersection("rod spheres do not intersect")
    h = math.sqrt(h_sq)
    p_a = p0 + h * nn
    p_b = p0 - h * nn
    return p_a if p_a[2] >= p_b[2] else p_b


def jacobian(geom: DeltaGeometry, pose) -> np.ndarray:
    """J = d(theta)/d(pose), rad per mm, via the implicit rod constraint.

    Row i: differentiate |P + Rp*u_i - K_i|^2 = Lr^2 to get
    d(theta_i)/dP = w_i / (w_i . dK_i/dtheta_i) with w_i the rod vector
    from knee to wrist. Raises Singular past the condition threshold.
    """
    p = np.asarray(pose, dtype=float)
    th = inverse_kinematics(geom, p)
    frames = _arm_frames(geom)
    J = np.empty((3, 3))
    la = geom.upper_arm_length
    for i, (u, t) in enumerate(frames):
        knee = _knee(geom, i, th[i], u)
        w = p + geom.platform_joint_radius * u - knee
        dk = la * (-math.sin(th[i]) * u + math.cos(th[i]) * _Z)
        denom = float(w @ dk)
        if abs(denom) < 1e-12:
            raise Singular(f"arm {i} at a fold singularity")
        J[i, :] = w / denom
    if np.linalg.cond(J) > SINGULARITY_COND:
        raise Singular("jacobian condition number exceeds threshold")
    return J


def torques_for_force(geom: DeltaGeometry, pose, force, torque_limit: float = TORQUE_LIMIT_NM) -> np.ndarray:
    """Servo torques (N*m) that exert ``force`` (N) on the finger pad.

    Static balance for a parallel mechanism with J = d(theta)/d(x) is
    J^T tau = f, so tau = J^-T f; positive fz presses into the pad.
    J is rad/mm, so the raw product is N*mm and is scaled to N*m.

    Raises TorqueLimitExceeded when any |tau_i| > torque_limit, signalling
    the renderer to clamp the stimulus.
    """
    f = np.asarray(force, dtype=float)
    J = jacobian(geom, pose)
    tau_nmm = np.linalg.solve(J.T, f)
    tau = tau_nmm / 1000.0
    if np.any(np.abs(tau) > torque_limit + 1e-15):
        raise TorqueLimitExceeded(
            f"|tau| up to {np.max(np.abs(tau)):.4g} N*m exceeds {torque_limit:.4g}"
        )
    return tau


def max_normal_force(geom: DeltaGeometry, pose, torque_limit: float = TORQUE_LIMIT_NM) -> float:
    """Largest pure +z force (fx = fy = 0) within the per-servo torque limit.

    With tau = J^-T (0, 0, fz), the binding servo is the largest z-column
    entry of J^-T: fz_max = torque_limit / max_i |(J^-T)_i3|.
    """
    J = jacobian(geom, pose)
    jinv_t = np.linalg.inv(J.T)
    col = np.abs(jinv_t[:, 2])  # N*mm per N
    m = float(np.max(col))
    if m < 1e-15:
        raise Singular("degenerate force map")
    return torque_limit * 1000.0 / m


def workspace_report(geom: DeltaGeometry, spec: WorkspaceSpec, step: float = 0.5) -> dict:
    """Grid-sample the workspace cylinder (step <= 0.5 mm).

    Returns fraction reachable, min/max of max_normal_force over the contact
    plane, and the worst Jacobian condition number. Raises GeometryInfeasible
    (with the partial report attached) if any sample is unreachable.
    """
    if step > 0.5:
        step = 0.5
    xs = np.arange(-spec.radius, spec.radius + step / 2, step)
    zs = np.arange(spec.z_min, spec.contact_plane_z + step / 2, step)
    total = 0
    reachable = 0
    worst_cond = 0.0
    fmin, fmax = math.inf, -math.inf
    unreachable = []
    for x in xs:
        for y in xs:
            if math.hypot(x, y) > spec.radius + 1e-9:
                continue
            for z in zs:
                total += 1
                pose = np.array([x, y, z])
                try:
                    th = inverse_kinematics(geom, pose)
                    rt = forward_kinematics(geom, th)
                except (Unreachable, JointLimit, NoIntersection, Singular):
                    unreachable.append((float(x), float(y), float(z)))
                    continue
                if np.linalg.norm(rt - pose) > 1e-6:
                    unreachable.append((float(x), float(y), float(z)))
                    continue
                reachable += 1
                J = jacobian(geom, pose)
                worst_cond = max(worst_cond, float(np.linalg.cond(J)))
                if abs(z - spec.contact_plane_z) < step / 2:
                    f = max_normal_force(geom, pose)
                    fmin = min(fmin, f)
                    fmax = max(fmax, f)
    report = {
        "samples": total,
        "reachable": reachable,
        "fraction_reachable": reachable / total if total else 0.0,
        "min_max_normal_force": fmin if fmin != math.inf else None,
        "max_max_normal_force": fmax if fmax != -math.inf else None,
        "worst_condition_number": worst_cond,
        "grid_step": step,
    }
    if unreachable:
        raise GeometryInfeasible(
            f"{len(unreachable)}/{total} cylinder samples unreachable "
            f"(first at {unreachable[0]})",
            report=report,
        )
    return report
