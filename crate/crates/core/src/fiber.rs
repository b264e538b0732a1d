//! Fiber-based Lagrangian elasticity.
//!
//! The structure is a set of nodes indexed (l,m,n) carrying chains along the
//! third curvilinear coordinate; each fixed (l,m) labels one fiber. Chains
//! resist stretching through a linear tension law T = kappa * (|D X| - (1 +
//! eps0)) and resist bending through repeated second differences against the
//! reference configuration. Anchor springs tie selected nodes to fixed
//! targets (used for semi-rigid walls). All forces are densities per unit
//! curvilinear volume, so spreading with weight ds1*ds2*ds3 yields real
//! forces; by construction they are exactly the negative gradient of the
//! discrete elastic energy scaled by 1/(ds1*ds2*ds3).

use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct Chain {
    /// Ordered node ids; a closed chain also links the last node to the first.
    pub nodes: Vec<usize>,
    /// Per-link stretching stiffness (links = nodes-1, or nodes if closed).
    pub kappa: Vec<f64>,
    /// Per-link rest strain (the link is slack at stretch ratio 1 + eps0).
    pub eps0: Vec<f64>,
    /// Per-node bending stiffness.
    pub c_b: Vec<f64>,
    pub closed: bool,
}

impl Chain {
    pub fn uniform(nodes: Vec<usize>, kappa: f64, eps0: f64, c_b: f64, closed: bool) -> Self {
        let links = if closed { nodes.len() } else { nodes.len().saturating_sub(1) };
        let n = nodes.len();
        Chain {
            nodes,
            kappa: vec![kappa; links],
            eps0: vec![eps0; links],
            c_b: vec![c_b; n],
            closed,
        }
    }

    pub fn num_links(&self) -> usize {
        if self.closed {
            self.nodes.len()
        } else {
            self.nodes.len() - 1
        }
    }
}

#[derive(Clone, Debug)]
pub struct Anchor {
    pub node: usize,
    pub target: [f64; 3],
    pub stiffness: f64,
}

#[derive(Clone, Debug)]
pub struct FiberMesh {
    /// Current node positions (cm).
    pub positions: Vec<[f64; 3]>,
    /// Reference configuration, fixed at the initial positions.
    pub reference: Vec<[f64; 3]>,
    /// Curvilinear (l,m,n) labels, informational.
    pub labels: Vec<[i64; 3]>,
    /// Curvilinear mesh spacings (ds2 = 1 by convention in 2D).
    pub ds: [f64; 3],
    pub chains: Vec<Chain>,
    pub anchors: Vec<Anchor>,
}

/// Per-node force densities split by physical origin.
#[derive(Clone, Debug)]
pub struct FiberForces {
    pub stretching: Vec<[f64; 3]>,
    pub bending: Vec<[f64; 3]>,
    pub anchor: Vec<[f64; 3]>,
    pub total: Vec<[f64; 3]>,
}

fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn norm(a: [f64; 3]) -> f64 {
    (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt()
}

impl FiberMesh {
    /// Nodes without connectivity (point forces / passive markers).
    pub fn free_nodes(positions: Vec<[f64; 3]>, ds: [f64; 3]) -> Self {
        let n = positions.len();
        FiberMesh {
            reference: positions.clone(),
            positions,
            labels: (0..n).map(|i| [i as i64, 0, 0]).collect(),
            ds,
            chains: Vec::new(),
            anchors: Vec::new(),
        }
    }

    pub fn num_nodes(&self) -> usize {
        self.positions.len()
    }

    pub fn ds_volume(&self) -> f64 {
        self.ds[0] * self.ds[1] * self.ds[2]
    }

    pub fn validate(&self) -> Result<()> {
        if self.ds.iter().any(|&d| d <= 0.0) {
            return Err(Error::Mesh("curvilinear spacings must be positive".into()));
        }
        if self.reference.len() != self.positions.len() || self.labels.len() != self.positions.len()
        {
            return Err(Error::Mesh("reference/label arrays must match node count".into()));
        }
        for (ci, ch) in self.chains.iter().enumerate() {
            if ch.nodes.len() < 2 {
                return Err(Error::Mesh(format!("chain {ci} has fewer than 2 nodes")));
            }
            let mut seen = std::collections::HashSet::new();
            for &n in &ch.nodes {
                if n >= self.positions.len() {
                    return Err(Error::Mesh(format!("chain {ci} references unknown node {n}")));
                }
                if !seen.insert(n) {
                    return Err(Error::Mesh(format!(
                        "chain {ci} is not a simple path (node {n} repeats)"
                    )));
                }
            }
            if ch.kappa.len() != ch.num_links() || ch.eps0.len() != ch.num_links() {
                return Err(Error::Mesh(format!("chain {ci}: per-link arrays sized wrongly")));
            }
            if ch.c_b.len() != ch.nodes.len() {
                return Err(Error::Mesh(format!("chain {ci}: c_b must be per-node")));
            }
            if ch.c_b.iter().any(|&c| c < 0.0) {
                return Err(Error::Mesh(format!("chain {ci}: negative bending stiffness")));
            }
            if ch.c_b.iter().any(|&c| c > 0.0) && ch.nodes.len() < 4 {
                return Err(Error::Mesh(format!(
                    "chain {ci}: bending stiffness needs at least 4 nodes, got {}",
                    ch.nodes.len()
                )));
            }
        }
        for (ai, a) in self.anchors.iter().enumerate() {
            if a.node >= self.positions.len() {
                return Err(Error::Mesh(format!("anchor {ai} references unknown node")));
            }
            if a.stiffness < 0.0 {
                return Err(Error::Mesh(format!("anchor {ai} has negative stiffness")));
            }
        }
        Ok(())
    }

    /// Link endpoints (i, j) of `chain`, in order.
    fn links(ch: &Chain) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..ch.num_links()).map(move |k| {
            let i = ch.nodes[k];
            let j = ch.nodes[(k + 1) % ch.nodes.len()];
            (i, j)
        })
    }

    /// Tension times unit tangent for every link of `ch`.
    fn link_tensions(&self, ch: &Chain, ci: usize) -> Result<Vec<[f64; 3]>> {
        let ds3 = self.ds[2];
        let mut t = Vec::with_capacity(ch.num_links());
        for (k, (i, j)) in Self::links(ch).enumerate() {
            let d = sub(self.positions[j], self.positions[i]);
            let len = norm(d);
            if len == 0.0 {
                return Err(Error::Mesh(format!(
                    "chain {ci} link {k} ({i} -> {j}) has coincident endpoints"
                )));
            }
            let stretch = len / ds3;
            let tension = ch.kappa[k] * (stretch - (1.0 + ch.eps0[k]));
            let scale = tension / len;
            t.push([d[0] * scale, d[1] * scale, d[2] * scale]);
        }
        Ok(t)
    }

    /// Stretching force density F_s = D_{s3}(T tau).
    pub fn stretching_force(&self) -> Result<Vec<[f64; 3]>> {
        let mut f = vec![[0.0; 3]; self.num_nodes()];
        let inv_ds3 = 1.0 / self.ds[2];
        for (ci, ch) in self.chains.iter().enumerate() {
            let tt = self.link_tensions(ch, ci)?;
            for (k, (i, j)) in Self::links(ch).enumerate() {
                for a in 0..3 {
                    f[i][a] += tt[k][a] * inv_ds3;
                    f[j][a] -= tt[k][a] * inv_ds3;
                }
            }
        }
        Ok(f)
    }

    /// Second difference of `x` along the chain at local node `q`, or None
    /// where the stencil leaves the chain.
    fn second_diff(x: &[[f64; 3]], ch: &Chain, q: usize, inv_ds3_sq: f64) -> Option<[f64; 3]> {
        let n = ch.nodes.len();
        let (im, ip) = if ch.closed {
            (((q + n - 1) % n) as i64, ((q + 1) % n) as i64)
        } else {
            if q == 0 || q + 1 >= n {
                return None;
            }
            ((q - 1) as i64, (q + 1) as i64)
        };
        let (a, b, c) = (
            x[ch.nodes[im as usize]],
            x[ch.nodes[q]],
            x[ch.nodes[ip as usize]],
        );
        Some([
            (a[0] - 2.0 * b[0] + c[0]) * inv_ds3_sq,
            (a[1] - 2.0 * b[1] + c[1]) * inv_ds3_sq,
            (a[2] - 2.0 * b[2] + c[2]) * inv_ds3_sq,
        ])
    }

    /// Bending force density F_b = D^2_{s3}( c_b (D^2 Xbar - D^2 X) ).
    pub fn bending_force(&self) -> Result<Vec<[f64; 3]>> {
        let mut f = vec![[0.0; 3]; self.num_nodes()];
        let inv2 = 1.0 / (self.ds[2] * self.ds[2]);
        for (ci, ch) in self.chains.iter().enumerate() {
            if ch.c_b.iter().all(|&c| c == 0.0) {
                continue;
            }
            if ch.nodes.len() < 4 {
                return Err(Error::Mesh(format!(
                    "chain {ci}: bending force on a chain shorter than the stencil"
                )));
            }
            let n = ch.nodes.len();
            // Moment c_b * (D^2 Xbar - D^2 X) per node, zero where undefined.
            let mut moment = vec![[0.0_f64; 3]; n];
            for q in 0..n {
                if ch.c_b[q] == 0.0 {
                    continue;
                }
                if let (Some(dref), Some(dcur)) = (
                    Self::second_diff(&self.reference, ch, q, inv2),
                    Self::second_diff(&self.positions, ch, q, inv2),
                ) {
                    for a in 0..3 {
                        moment[q][a] = ch.c_b[q] * (dref[a] - dcur[a]);
                    }
                }
            }
            // Second difference of the moment distributes to the nodes.
            for q in 0..n {
                let stencil: [(i64, f64); 3] = [(-1, 1.0), (0, -2.0), (1, 1.0)];
                for (off, w) in stencil {
                    let p = q as i64 + off;
                    let p = if ch.closed {
                        (p.rem_euclid(n as i64)) as usize
                    } else {
                        if p < 0 || p >= n as i64 {
                            continue;
                        }
                        p as usize
                    };
                    for a in 0..3 {
                        f[ch.nodes[p]][a] += w * moment[q][a] * inv2;
                    }
                }
            }
        }
        Ok(f)
    }

    fn anchor_force(&self) -> Vec<[f64; 3]> {
        let mut f = vec![[0.0; 3]; self.num_nodes()];
        let inv_vol = 1.0 / self.ds_volume();
        for a in &self.anchors {
            let d = sub(self.positions[a.node], a.target);
            for c in 0..3 {
                f[a.node][c] -= a.stiffness * d[c] * inv_vol;
            }
        }
        f
    }

    /// Sum of stretching, bending and anchor force densities.
    pub fn total_lagrangian_force(&self) -> Result<FiberForces> {
        let stretching = self.stretching_force()?;
        let bending = self.bending_force()?;
        let anchor = self.anchor_force();
        let total = (0..self.num_nodes())
            .map(|i| {
                [
                    stretching[i][0] + bending[i][0] + anchor[i][0],
                    stretching[i][1] + bending[i][1] + anchor[i][1],
                    stretching[i][2] + bending[i][2] + anchor[i][2],
                ]
            })
            .collect();
        Ok(FiberForces { stretching, bending, anchor, total })
    }

    /// Discrete elastic energy (erg): stretching + bending quadrature over
    /// the curvilinear mesh, plus anchor spring energy.
    pub fn elastic_energy(&self) -> Result<f64> {
        let vol = self.ds_volume();
        let ds3 = self.ds[2];
        let inv2 = 1.0 / (ds3 * ds3);
        let mut e = 0.0;
        for (ci, ch) in self.chains.iter().enumerate() {
            for (k, (i, j)) in Self::links(ch).enumerate() {
                let len = norm(sub(self.positions[j], self.positions[i]));
                if len == 0.0 {
                    return Err(Error::Mesh(format!(
                        "chain {ci} link {k} has coincident endpoints"
                    )));
                }
                let strain = len / ds3 - (1.0 + ch.eps0[k]);
                e += 0.5 * ch.kappa[k] * strain * strain * vol;
            }
            let n = ch.nodes.len();
            for q in 0..n {
                if ch.c_b[q] == 0.0 {
                    continue;
                }
                if let (Some(dref), Some(dcur)) = (
                    Self::second_diff(&self.reference, ch, q, inv2),
                    Self::second_diff(&self.positions, ch, q, inv2),
                ) {
                    let m = sub(dcur, dref);
                    e += 0.5 * ch.c_b[q] * (m[0] * m[0] + m[1] * m[1] + m[2] * m[2]) * vol;
                }
            }
        }
        for a in &self.anchors {
            let d = sub(self.positions[a.node], a.target);
            e += 0.5 * a.stiffness * (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]);
        }
        Ok(e)
    }
}
