//! Drop geometry: where the cBSs, eAPs and users sit.

use serde::Serialize;

use crate::config::{NetworkConfig, Scenario};
use crate::rng::RandomStream;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Positions of every transceiver site and user in one drop.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Topology {
    /// cBS position per cell (the cell center; unused when `N_b = 0`).
    pub cbs_pos: Vec<Point>,
    /// eAP positions per cell, `L_c` each.
    pub eap_pos: Vec<Vec<Point>>,
    /// User positions per cell, `K_c` each.
    pub ue_pos: Vec<Vec<Point>>,
    pub drop_index: u64,
}

impl Topology {
    /// Position of site `site` (0 = cBS) of `cell`.
    pub fn site(&self, cell: usize, site: usize) -> Point {
        if site == 0 {
            self.cbs_pos[cell]
        } else {
            self.eap_pos[cell][site - 1]
        }
    }

    pub fn user(&self, cell: usize, k: usize) -> Point {
        self.ue_pos[cell][k]
    }
}

/// Lower-left corner of cell `c` on the row-major grid.
fn cell_origin(config: &NetworkConfig, cell: usize) -> Point {
    let side = config.cells_per_side();
    Point::new((cell % side) as f64 * config.cell_m, (cell / side) as f64 * config.cell_m)
}

/// Point at arc length `s` along the counter-clockwise perimeter of the
/// square `[origin, origin + side]^2`, starting from its lower-left corner.
pub fn perimeter_point(origin: Point, side: f64, s: f64) -> Point {
    let s = s.rem_euclid(4.0 * side);
    let (edge, t) = ((s / side).floor() as usize, s % side);
    match edge {
        0 => Point::new(origin.x + t, origin.y),
        1 => Point::new(origin.x + side, origin.y + t),
        2 => Point::new(origin.x + side - t, origin.y + side),
        _ => Point::new(origin.x, origin.y + side - t),
    }
}

/// Inverse of [`perimeter_point`] for a point on the perimeter.
pub fn perimeter_arc(origin: Point, side: f64, p: Point) -> f64 {
    let (dx, dy) = (p.x - origin.x, p.y - origin.y);
    let eps = 1e-9 * side.max(1.0);
    if dy.abs() < eps && dx < side - eps {
        dx
    } else if (dx - side).abs() < eps && dy < side - eps {
        side + dy
    } else if (dy - side).abs() < eps && dx > eps {
        2.0 * side + (side - dx)
    } else {
        3.0 * side + (side - dy)
    }
}

/// `count` eAPs evenly spaced on the cell perimeter shrunk by `inset`.
/// Arc positions are `(j + 1/2) P / count`, so four eAPs land on the edge
/// midpoints.
pub fn eap_ring(config: &NetworkConfig, cell: usize, count: usize) -> Vec<Point> {
    let o = cell_origin(config, cell);
    let inner = Point::new(o.x + config.eap_inset_m, o.y + config.eap_inset_m);
    let side = config.cell_m - 2.0 * config.eap_inset_m;
    let spacing = 4.0 * side / count as f64;
    (0..count).map(|j| perimeter_point(inner, side, (j as f64 + 0.5) * spacing)).collect()
}

/// Random geometry for one drop.
///
/// cBSs sit at cell centers. `hmmimo` eAPs ring each cell's perimeter,
/// `cfmmimo` access points are uniform over the whole region, `cmmimo` has
/// none. Users are uniform inside their cell and are resampled until they are
/// at least `min_distance_m` from every site that carries antennas.
pub fn place_topology(config: &NetworkConfig, rng: &mut RandomStream, drop_index: u64) -> Topology {
    let cells = config.cells;
    let cbs_pos: Vec<Point> = (0..cells)
        .map(|c| {
            let o = cell_origin(config, c);
            Point::new(o.x + 0.5 * config.cell_m, o.y + 0.5 * config.cell_m)
        })
        .collect();

    let eap_pos: Vec<Vec<Point>> = match config.scenario {
        Scenario::Cmmimo => vec![Vec::new(); cells],
        Scenario::Hmmimo => (0..cells).map(|c| eap_ring(config, c, config.eaps_per_cell)).collect(),
        Scenario::Cfmmimo => (0..cells)
            .map(|_| {
                (0..config.eaps_per_cell)
                    .map(|_| Point::new(rng.uniform_range(0.0, config.area_m), rng.uniform_range(0.0, config.area_m)))
                    .collect()
            })
            .collect(),
    };

    let mut sites: Vec<Point> = eap_pos.iter().flatten().copied().collect();
    if config.cbs_antennas > 0 {
        sites.extend(&cbs_pos);
    }

    let ue_pos = (0..cells)
        .map(|c| {
            let o = cell_origin(config, c);
            (0..config.users_per_cell)
                .map(|_| loop {
                    let p = Point::new(
                        rng.uniform_range(o.x, o.x + config.cell_m),
                        rng.uniform_range(o.y, o.y + config.cell_m),
                    );
                    if sites.iter().all(|s| s.distance(&p) >= config.min_distance_m) {
                        break p;
                    }
                })
                .collect()
        })
        .collect();

    Topology { cbs_pos, eap_pos, ue_pos, drop_index }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Stage;

    fn topo(config: &NetworkConfig, drop: u64) -> Topology {
        place_topology(config, &mut RandomStream::new(config.seed, drop, Stage::Topology), drop)
    }

    fn inside(p: &Point, lo: f64, hi: f64) -> bool {
        (lo..=hi).contains(&p.x) && (lo..=hi).contains(&p.y)
    }

    #[test]
    fn hmmimo_reference_layout() {
        let cfg = NetworkConfig::reference();
        let t = topo(&cfg, 0);
        assert_eq!(t.cbs_pos.len(), 4);
        let centers = [(250.0, 250.0), (750.0, 250.0), (250.0, 750.0), (750.0, 750.0)];
        for (p, (x, y)) in t.cbs_pos.iter().zip(centers) {
            assert_eq!((p.x, p.y), (x, y));
        }
        assert_eq!(t.eap_pos.iter().map(Vec::len).sum::<usize>(), 64);
        for c in 0..4 {
            let o = cell_origin(&cfg, c);
            assert_eq!(t.ue_pos[c].len(), 8);
            for p in t.eap_pos[c].iter().chain(&t.ue_pos[c]) {
                assert!(inside(p, 0.0, 1000.0));
                assert!(p.x >= o.x && p.x <= o.x + 500.0 && p.y >= o.y && p.y <= o.y + 500.0);
            }
        }
    }

    #[test]
    fn eaps_evenly_spaced_at_inset() {
        let cfg = NetworkConfig::reference();
        for c in 0..cfg.cells {
            let ring = eap_ring(&cfg, c, cfg.eaps_per_cell);
            let o = cell_origin(&cfg, c);
            let inner = Point::new(o.x + cfg.eap_inset_m, o.y + cfg.eap_inset_m);
            let side = cfg.cell_m - 2.0 * cfg.eap_inset_m;
            let arcs: Vec<f64> = ring.iter().map(|p| perimeter_arc(inner, side, *p)).collect();
            let expected = 4.0 * side / ring.len() as f64;
            for w in arcs.windows(2) {
                assert!((w[1] - w[0] - expected).abs() < 1e-6, "{arcs:?}");
            }
            // Each eAP is exactly `inset` from the nearest cell edge.
            for p in &ring {
                let edge = (p.x - o.x).min(o.x + cfg.cell_m - p.x).min(p.y - o.y).min(o.y + cfg.cell_m - p.y);
                assert!((edge - cfg.eap_inset_m).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn cmmimo_has_no_eaps() {
        let cfg = NetworkConfig::reference().for_scenario(Scenario::Cmmimo).unwrap();
        let t = topo(&cfg, 3);
        assert!(t.eap_pos.iter().all(Vec::is_empty));
        assert_eq!(t.cbs_pos.len(), 4);
    }

    #[test]
    fn cfmmimo_has_one_cell_of_distributed_aps() {
        let cfg = NetworkConfig::reference().for_scenario(Scenario::Cfmmimo).unwrap();
        let t = topo(&cfg, 3);
        assert_eq!(t.eap_pos.len(), 1);
        assert_eq!(t.eap_pos[0].len(), 128);
        assert_eq!(t.ue_pos[0].len(), 32);
        assert!(t.eap_pos[0].iter().all(|p| inside(p, 0.0, 1000.0)));
    }

    #[test]
    fn deterministic_per_seed_and_drop() {
        let cfg = NetworkConfig::reference();
        assert_eq!(topo(&cfg, 5), topo(&cfg, 5));
        assert_ne!(topo(&cfg, 5), topo(&cfg, 6));
    }

    #[test]
    fn minimum_distance_is_respected() {
        let cfg = NetworkConfig { min_distance_m: 40.0, ..NetworkConfig::desk() };
        for drop in 0..50 {
            let t = topo(&cfg, drop);
            for users in &t.ue_pos {
                for u in users {
                    for c in 0..cfg.cells {
                        assert!(u.distance(&t.cbs_pos[c]) >= 40.0);
                        for e in &t.eap_pos[c] {
                            assert!(u.distance(e) >= 40.0);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn users_uniform_within_cell() {
        let cfg =
            NetworkConfig { users_per_cell: 1, eaps_per_cell: 0, scenario: Scenario::Cmmimo, ..NetworkConfig::desk() };
        let drops = 10_000;
        let mut sums = vec![0.0; cfg.cells];
        for d in 0..drops {
            let t = topo(&cfg, d);
            for (s, users) in sums.iter_mut().zip(&t.ue_pos) {
                *s += users[0].x;
            }
        }
        // Uniform on a 500 m interval has standard deviation 500/sqrt(12).
        let se = cfg.cell_m / 12f64.sqrt() / (drops as f64).sqrt();
        let t = topo(&cfg, 0);
        for (c, (s, center)) in sums.iter().zip(&t.cbs_pos).enumerate() {
            let mean = s / drops as f64;
            assert!((mean - center.x).abs() < 3.0 * se, "cell {c}: {mean}");
        }
    }
}
