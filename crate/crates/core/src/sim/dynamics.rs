//! Planar equations of motion for a serial chain on a rotating board.
//!
//! With the board angle prescribed, the joint dynamics read
//! `M(q) q̈ + h(q, q̇, β, β̇, β̈) = τ`, where `h` collects gravity,
//! velocity-product and board-motion terms. Rotor armature enters `M` on
//! the diagonal.

use super::chain::ChainModel;
use super::SimError;

/// Prescribed board motion at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BaseKinematics {
    pub tilt: f64,
    pub rate: f64,
    pub accel: f64,
}

#[inline]
fn perp(v: [f64; 2]) -> [f64; 2] {
    [-v[1], v[0]]
}

#[inline]
fn dot(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

#[inline]
fn sub(a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
    [a[0] - b[0], a[1] - b[1]]
}

/// Scratch buffers for one chain; reused across steps to keep the inner
/// loop allocation-free.
#[derive(Debug, Clone)]
pub struct Workspace {
    n: usize,
    /// Joint positions (n) followed by the distal tip.
    pub joint_pos: Vec<[f64; 2]>,
    pub com_pos: Vec<[f64; 2]>,
    pub com_vel: Vec<[f64; 2]>,
    /// Absolute link angles.
    pub angle: Vec<f64>,
    pub omega: Vec<f64>,
    /// `jac[i * n + k]`: d(com_i)/d(q_k), zero for k > i.
    pub jac: Vec<[f64; 2]>,
    /// CoM acceleration with zero joint acceleration.
    pub accel0: Vec<[f64; 2]>,
    pub mass: Vec<f64>,
    pub bias: Vec<f64>,
    chol: Vec<f64>,
    rhs: Vec<f64>,
    free: Vec<usize>,
}

impl Workspace {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            joint_pos: vec![[0.0; 2]; n + 1],
            com_pos: vec![[0.0; 2]; n],
            com_vel: vec![[0.0; 2]; n],
            angle: vec![0.0; n],
            omega: vec![0.0; n],
            jac: vec![[0.0; 2]; n * n],
            accel0: vec![[0.0; 2]; n],
            mass: vec![0.0; n * n],
            bias: vec![0.0; n],
            chol: vec![0.0; n * n],
            rhs: vec![0.0; n],
            free: Vec::with_capacity(n),
        }
    }

    pub fn dof(&self) -> usize {
        self.n
    }

    /// Fills kinematics, mass matrix and bias vector for the given state.
    pub fn update(&mut self, chain: &ChainModel, q: &[f64], qdot: &[f64], base: BaseKinematics) {
        let n = self.n;
        debug_assert_eq!(chain.dof(), n);
        let (sb, cb) = base.tilt.sin_cos();
        let m = chain.mount;
        let p0 = [cb * m[0] - sb * m[1], sb * m[0] + cb * m[1]];
        self.joint_pos[0] = p0;
        let mut joint_vel = [-base.rate * p0[1], base.rate * p0[0]];
        let w2 = base.rate * base.rate;
        let mut joint_acc = [-w2 * p0[0], -w2 * p0[1]];

        let mut phi = base.tilt;
        let mut omega = base.rate;
        for i in 0..n {
            phi += q[i];
            omega += qdot[i];
            self.angle[i] = phi;
            self.omega[i] = omega;
            let link = chain.effective_link(i);
            let (s, c) = phi.sin_cos();
            let axis = [-s, c];
            let side = [c, s];
            let p = self.joint_pos[i];
            let rel = [
                link.com * axis[0] + link.com_lateral * side[0],
                link.com * axis[1] + link.com_lateral * side[1],
            ];
            let com = [p[0] + rel[0], p[1] + rel[1]];
            self.com_pos[i] = com;
            let rp = perp(rel);
            self.com_vel[i] = [joint_vel[0] + omega * rp[0], joint_vel[1] + omega * rp[1]];
            let o2 = omega * omega;
            let pc = perp(com);
            self.accel0[i] = [
                joint_acc[0] - o2 * rel[0] + base.accel * pc[0],
                joint_acc[1] - o2 * rel[1] + base.accel * pc[1],
            ];
            let tip = [link.length * axis[0], link.length * axis[1]];
            self.joint_pos[i + 1] = [p[0] + tip[0], p[1] + tip[1]];
            let tp = perp(tip);
            joint_vel = [joint_vel[0] + omega * tp[0], joint_vel[1] + omega * tp[1]];
            joint_acc = [joint_acc[0] - o2 * tip[0], joint_acc[1] - o2 * tip[1]];
        }

        for i in 0..n {
            for k in 0..n {
                self.jac[i * n + k] = if k <= i {
                    perp(sub(self.com_pos[i], self.joint_pos[k]))
                } else {
                    [0.0, 0.0]
                };
            }
        }

        let g = [0.0, -chain.gravity];
        for j in 0..n {
            for k in j..n {
                let mut v = 0.0;
                for i in k..n {
                    let l = chain.effective_link(i);
                    v += l.mass * dot(self.jac[i * n + j], self.jac[i * n + k]) + l.inertia;
                }
                if j == k {
                    v += chain.joints[j].actuator.motor.armature;
                }
                self.mass[j * n + k] = v;
                self.mass[k * n + j] = v;
            }
            let mut h = 0.0;
            for i in j..n {
                let l = chain.effective_link(i);
                h += l.mass * dot(self.jac[i * n + j], sub(self.accel0[i], g)) + l.inertia * base.accel;
            }
            self.bias[j] = h;
        }
    }

    /// Solves `M q̈ = rhs` for the joints not in `locked`; locked joints get
    /// zero acceleration. `M` must have been filled by [`Workspace::update`].
    pub fn solve(&mut self, rhs: &[f64], locked: &[bool], qddot: &mut [f64]) -> Result<(), SimError> {
        let n = self.n;
        self.free.clear();
        self.free.extend((0..n).filter(|&j| !locked[j]));
        let m = self.free.len();
        for j in 0..n {
            qddot[j] = 0.0;
        }
        if m == 0 {
            return Ok(());
        }
        // Cholesky of the free-joint block.
        for a in 0..m {
            for b in 0..=a {
                let mut s = self.mass[self.free[a] * n + self.free[b]];
                for k in 0..b {
                    s -= self.chol[a * n + k] * self.chol[b * n + k];
                }
                if a == b {
                    if !(s > 0.0) {
                        return Err(SimError::SingularMass);
                    }
                    self.chol[a * n + a] = s.sqrt();
                } else {
                    self.chol[a * n + b] = s / self.chol[b * n + b];
                }
            }
        }
        for a in 0..m {
            let mut s = rhs[self.free[a]];
            for k in 0..a {
                s -= self.chol[a * n + k] * self.rhs[k];
            }
            self.rhs[a] = s / self.chol[a * n + a];
        }
        for a in (0..m).rev() {
            let mut s = self.rhs[a];
            for k in a + 1..m {
                s -= self.chol[k * n + a] * self.rhs[k];
            }
            self.rhs[a] = s / self.chol[a * n + a];
        }
        for a in 0..m {
            qddot[self.free[a]] = self.rhs[a];
        }
        Ok(())
    }

    /// Acceleration of link `i`'s CoM for the given joint accelerations.
    pub fn com_accel(&self, i: usize, qddot: &[f64]) -> [f64; 2] {
        let n = self.n;
        let mut a = self.accel0[i];
        for k in 0..=i {
            let j = self.jac[i * n + k];
            a[0] += j[0] * qddot[k];
            a[1] += j[1] * qddot[k];
        }
        a
    }

    pub fn mass_entry(&self, j: usize, k: usize) -> f64 {
        self.mass[j * self.n + k]
    }
}

/// Joint accelerations for applied joint torques `tau`.
pub fn forward_dynamics(
    chain: &ChainModel,
    q: &[f64],
    qdot: &[f64],
    base: BaseKinematics,
    tau: &[f64],
) -> Result<Vec<f64>, SimError> {
    let n = chain.dof();
    let mut ws = Workspace::new(n);
    ws.update(chain, q, qdot, base);
    let rhs: Vec<f64> = (0..n).map(|j| tau[j] - ws.bias[j]).collect();
    let mut out = vec![0.0; n];
    ws.solve(&rhs, &vec![false; n], &mut out)?;
    Ok(out)
}

/// Generalized torque acting on joint `joint` from everything except its
/// own motor: gravity, velocity-product coupling, board motion and any
/// external torque. Inertial coupling through other joints' accelerations
/// is not included because it depends on the unknown accelerations.
pub fn estimate_load_torque(
    chain: &ChainModel,
    q: &[f64],
    qdot: &[f64],
    base: BaseKinematics,
    external: Option<&[f64]>,
    joint: usize,
) -> f64 {
    let mut ws = Workspace::new(chain.dof());
    ws.update(chain, q, qdot, base);
    -ws.bias[joint] + external.map_or(0.0, |e| e[joint])
}

/// Kinetic plus potential energy of the chain (board assumed at rest).
pub fn mechanical_energy(chain: &ChainModel, q: &[f64], qdot: &[f64], base: BaseKinematics) -> f64 {
    let n = chain.dof();
    let mut ws = Workspace::new(n);
    ws.update(chain, q, qdot, base);
    let mut e = 0.0;
    for i in 0..n {
        let l = chain.effective_link(i);
        let v = ws.com_vel[i];
        e += 0.5 * l.mass * dot(v, v) + 0.5 * l.inertia * ws.omega[i] * ws.omega[i];
        e += l.mass * chain.gravity * ws.com_pos[i][1];
        e += 0.5 * chain.joints[i].actuator.motor.armature * qdot[i] * qdot[i];
    }
    e
}
