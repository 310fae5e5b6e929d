//! Lane-choosing high-level planner.

use serde::{Deserialize, Serialize};

use crate::frs::{InitialState, ObstacleState};
use crate::zonotope::Vec2;

/// Straight multi-lane road along +x; lane 0 is at the bottom (`y = 0`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Road {
    pub lanes: usize,
    pub lane_width: f64,
    pub length: f64,
}

impl Default for Road {
    fn default() -> Self {
        Road {
            lanes: 3,
            lane_width: 3.7,
            length: 1000.0,
        }
    }
}

impl Road {
    pub fn lane_center(&self, lane: usize) -> f64 {
        (lane as f64 + 0.5) * self.lane_width
    }

    pub fn y_min(&self) -> f64 {
        0.0
    }

    pub fn y_max(&self) -> f64 {
        self.lanes as f64 * self.lane_width
    }

    /// Lane whose strip contains `y`, or `None` off the road.
    pub fn lane_of(&self, y: f64) -> Option<usize> {
        if y < self.y_min() || y >= self.y_max() {
            return None;
        }
        Some(((y / self.lane_width) as usize).min(self.lanes - 1))
    }

    pub fn nearest_lane(&self, y: f64) -> usize {
        ((y / self.lane_width).floor().max(0.0) as usize).min(self.lanes - 1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Waypoint {
    pub position: Vec2,
    pub lane_id: usize,
}

/// Free space ahead of the ego in `lane`: bumper-to-bumper distance to the
/// nearest obstacle that is not completely behind the ego.
pub fn lane_gap(road: &Road, lane: usize, ego: &InitialState, ego_len: f64, obstacles: &[ObstacleState]) -> f64 {
    obstacles
        .iter()
        .filter(|o| road.lane_of(o.pos.y) == Some(lane))
        .filter(|o| o.pos.x + 0.5 * o.l > ego.x - 0.5 * ego_len)
        .map(|o| (o.pos.x - 0.5 * o.l - (ego.x + 0.5 * ego_len)).max(0.0))
        .fold(f64::INFINITY, f64::min)
}

/// Picks the lane with the largest gap (ties: current lane, then lowest id)
/// and places the waypoint `min(gap − d_safe, d_wp_max)` ahead on its center.
pub fn high_level_planner(
    road: &Road,
    ego: &InitialState,
    ego_len: f64,
    obstacles: &[ObstacleState],
    d_safe: f64,
    d_wp_max: f64,
) -> Waypoint {
    let current = road.nearest_lane(ego.y);
    let gaps: Vec<f64> = (0..road.lanes)
        .map(|lane| lane_gap(road, lane, ego, ego_len, obstacles))
        .collect();
    let mut best = current;
    for lane in 0..road.lanes {
        if gaps[lane] > gaps[best] {
            best = lane;
        }
    }
    let ahead = (gaps[best] - d_safe).min(d_wp_max).max(0.0);
    Waypoint {
        position: Vec2::new(ego.x + ahead, road.lane_center(best)),
        lane_id: best,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ego() -> InitialState {
        InitialState {
            x: 100.0,
            y: Road::default().lane_center(1),
            h: 0.0,
            v: 20.0,
        }
    }

    fn car(x: f64, lane: usize) -> ObstacleState {
        ObstacleState {
            id: 0,
            pos: Vec2::new(x, Road::default().lane_center(lane)),
            vel: Vec2::zeros(),
            l: 4.8,
            w: 2.2,
        }
    }

    #[test]
    fn empty_road_keeps_lane() {
        let road = Road::default();
        let wp = high_level_planner(&road, &ego(), 4.8, &[], 20.0, 60.0);
        assert_eq!(wp.lane_id, 1);
        assert_eq!(wp.position, Vec2::new(160.0, road.lane_center(1)));
    }

    #[test]
    fn blocked_lane_switches() {
        let road = Road::default();
        let obs = [car(130.0, 1), car(200.0, 0), car(180.0, 2)];
        let wp = high_level_planner(&road, &ego(), 4.8, &obs, 20.0, 60.0);
        assert_eq!(wp.lane_id, 0);
    }

    #[test]
    fn ties_prefer_current_then_lowest() {
        let road = Road::default();
        let obs = [car(150.0, 0), car(150.0, 1), car(150.0, 2)];
        assert_eq!(high_level_planner(&road, &ego(), 4.8, &obs, 20.0, 60.0).lane_id, 1);
        let obs = [car(150.0, 1), car(180.0, 0), car(180.0, 2)];
        assert_eq!(high_level_planner(&road, &ego(), 4.8, &obs, 20.0, 60.0).lane_id, 0);
    }

    #[test]
    fn waypoint_is_clamped() {
        let road = Road::default();
        let obs = [car(110.0, 0), car(110.0, 1), car(110.0, 2)];
        let wp = high_level_planner(&road, &ego(), 4.8, &obs, 20.0, 60.0);
        assert_eq!(wp.position.x, 100.0);
    }
}
