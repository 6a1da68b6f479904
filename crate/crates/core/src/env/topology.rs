//! Road grid, gNB placement and vehicle movement.
//!
//! The grid has two horizontal and two vertical roads at one and two thirds
//! of the area side, which gives four intersections. Every road runs edge to
//! edge, so the eight road ends double as entry points for respawned vehicles.

use rand::Rng;
use serde::{Deserialize, Serialize};

const EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
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

/// Direction of travel. `North` increases `y`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Heading {
    North,
    East,
    South,
    West,
}

impl Heading {
    pub fn unit(self) -> (f64, f64) {
        match self {
            Heading::North => (0.0, 1.0),
            Heading::East => (1.0, 0.0),
            Heading::South => (0.0, -1.0),
            Heading::West => (-1.0, 0.0),
        }
    }

    fn left(self) -> Heading {
        match self {
            Heading::North => Heading::West,
            Heading::West => Heading::South,
            Heading::South => Heading::East,
            Heading::East => Heading::North,
        }
    }

    fn right(self) -> Heading {
        self.left().left().left()
    }

    fn is_horizontal(self) -> bool {
        matches!(self, Heading::East | Heading::West)
    }
}

/// Choice made at an intersection. U-turns never occur because every road
/// continues to the area edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Turn {
    Straight,
    Left,
    Right,
}

impl Turn {
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Turn {
        match rng.gen_range(0..3) {
            0 => Turn::Straight,
            1 => Turn::Left,
            _ => Turn::Right,
        }
    }

    pub fn apply(self, heading: Heading) -> Heading {
        match self {
            Turn::Straight => heading,
            Turn::Left => heading.left(),
            Turn::Right => heading.right(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoadGrid {
    area_side: f64,
    /// Coordinates of the two horizontal roads (y) and two vertical roads (x).
    lines: [f64; 2],
}

/// Result of moving a vehicle along the grid for a fixed distance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Movement {
    pub position: Point,
    pub heading: Heading,
    /// Number of queued turns consumed.
    pub turns_used: usize,
    /// The vehicle would have crossed the area boundary; `position` is the exit point.
    pub exited: bool,
}

impl RoadGrid {
    pub fn new(area_side: f64) -> Self {
        Self {
            area_side,
            lines: [area_side / 3.0, 2.0 * area_side / 3.0],
        }
    }

    pub fn area_side(&self) -> f64 {
        self.area_side
    }

    pub fn road_lines(&self) -> [f64; 2] {
        self.lines
    }

    pub fn intersections(&self) -> Vec<Point> {
        let mut out = Vec::with_capacity(4);
        for &x in &self.lines {
            for &y in &self.lines {
                out.push(Point::new(x, y));
            }
        }
        out
    }

    /// Road ends on the boundary with the heading that leads into the area.
    pub fn entry_points(&self) -> Vec<(Point, Heading)> {
        let a = self.area_side;
        let mut out = Vec::with_capacity(8);
        for &c in &self.lines {
            out.push((Point::new(0.0, c), Heading::East));
            out.push((Point::new(a, c), Heading::West));
            out.push((Point::new(c, 0.0), Heading::North));
            out.push((Point::new(c, a), Heading::South));
        }
        out
    }

    /// Shortest segment between consecutive intersections or edges.
    pub fn min_segment(&self) -> f64 {
        self.lines[0].min(self.lines[1] - self.lines[0]).min(self.area_side - self.lines[1])
    }

    /// Whether the point lies on one of the four roads.
    pub fn on_road(&self, p: Point) -> bool {
        let inside = (-EPS..=self.area_side + EPS).contains(&p.x)
            && (-EPS..=self.area_side + EPS).contains(&p.y);
        inside
            && self
                .lines
                .iter()
                .any(|&c| (p.x - c).abs() < 1e-6 || (p.y - c).abs() < 1e-6)
    }

    /// Uniform position on a uniformly chosen road, with a random direction.
    pub fn random_on_road<R: Rng + ?Sized>(&self, rng: &mut R) -> (Point, Heading) {
        let road = rng.gen_range(0..4);
        let along = rng.gen_range(0.0..self.area_side);
        let forward = rng.gen_bool(0.5);
        let c = self.lines[road % 2];
        if road < 2 {
            let h = if forward { Heading::East } else { Heading::West };
            (Point::new(along, c), h)
        } else {
            let h = if forward { Heading::North } else { Heading::South };
            (Point::new(c, along), h)
        }
    }

    pub fn random_entry<R: Rng + ?Sized>(&self, rng: &mut R) -> (Point, Heading) {
        let entries = self.entry_points();
        entries[rng.gen_range(0..entries.len())]
    }

    /// Distance to the next intersection strictly ahead, if the vehicle sits
    /// on a road that has crossings in its direction of travel.
    fn distance_to_crossing(&self, p: Point, heading: Heading) -> Option<f64> {
        let along = if heading.is_horizontal() { p.x } else { p.y };
        let sign = match heading {
            Heading::East | Heading::North => 1.0,
            Heading::West | Heading::South => -1.0,
        };
        self.lines
            .iter()
            .map(|&c| (c - along) * sign)
            .filter(|&d| d > EPS)
            .min_by(|a, b| a.total_cmp(b))
    }

    fn distance_to_edge(&self, p: Point, heading: Heading) -> f64 {
        match heading {
            Heading::East => self.area_side - p.x,
            Heading::West => p.x,
            Heading::North => self.area_side - p.y,
            Heading::South => p.y,
        }
    }

    fn snap(&self, p: Point, heading: Heading, crossing: bool) -> Point {
        // Place the vehicle exactly on the crossing road to stop drift.
        if !crossing {
            return p;
        }
        let nearest = |v: f64| {
            *self
                .lines
                .iter()
                .min_by(|a, b| (*a - v).abs().total_cmp(&(*b - v).abs()))
                .expect("two road lines")
        };
        if heading.is_horizontal() {
            Point::new(nearest(p.x), p.y)
        } else {
            Point::new(p.x, nearest(p.y))
        }
    }

    /// Moves `distance` meters from `start`, taking turns from `turns` in order
    /// at each intersection reached. Turns beyond the supplied slice default to
    /// straight; callers keep the queue long enough that this never happens.
    pub fn advance(&self, start: Point, heading: Heading, turns: &[Turn], distance: f64) -> Movement {
        let mut pos = start;
        let mut heading = heading;
        let mut remaining = distance;
        let mut turns_used = 0;
        loop {
            let to_edge = self.distance_to_edge(pos, heading);
            let to_cross = self.distance_to_crossing(pos, heading);
            let (ux, uy) = heading.unit();
            match to_cross {
                Some(d) if d <= remaining => {
                    pos = self.snap(Point::new(pos.x + ux * d, pos.y + uy * d), heading, true);
                    remaining -= d;
                    let turn = turns.get(turns_used).copied().unwrap_or(Turn::Straight);
                    turns_used += 1;
                    heading = turn.apply(heading);
                }
                _ if remaining > to_edge + EPS => {
                    let exit = Point::new(pos.x + ux * to_edge, pos.y + uy * to_edge);
                    return Movement {
                        position: self.clamp(exit),
                        heading,
                        turns_used,
                        exited: true,
                    };
                }
                _ => {
                    let p = Point::new(pos.x + ux * remaining, pos.y + uy * remaining);
                    return Movement {
                        position: self.clamp(p),
                        heading,
                        turns_used,
                        exited: false,
                    };
                }
            }
        }
    }

    fn clamp(&self, p: Point) -> Point {
        Point::new(p.x.clamp(0.0, self.area_side), p.y.clamp(0.0, self.area_side))
    }

    /// Upper bound on intersections crossed while moving `distance` meters.
    pub fn max_crossings(&self, distance: f64) -> usize {
        (distance / self.min_segment()).floor() as usize + 1
    }
}

/// Fixed gNB coordinates: one gNB at the center when `M = 1`, otherwise `M`
/// sites evenly spaced on a circle of radius `area_side / 4` around the center,
/// the first one due north. For three gNBs this puts a site over each third of
/// the area.
pub fn gnb_layout(area_side: f64, num_gnbs: usize) -> Vec<Point> {
    let c = area_side / 2.0;
    if num_gnbs == 1 {
        return vec![Point::new(c, c)];
    }
    let r = area_side / 4.0;
    (0..num_gnbs)
        .map(|k| {
            let theta = std::f64::consts::FRAC_PI_2 + 2.0 * std::f64::consts::PI * k as f64 / num_gnbs as f64;
            Point::new(c + r * theta.cos(), c + r * theta.sin())
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn four_intersections_eight_entries() {
        let g = RoadGrid::new(1000.0);
        assert_eq!(g.intersections().len(), 4);
        assert_eq!(g.entry_points().len(), 8);
        for (p, _) in g.entry_points() {
            assert!(g.on_road(p));
        }
    }

    #[test]
    fn straight_move_far_from_intersection() {
        let g = RoadGrid::new(1000.0);
        let start = Point::new(100.0, 1000.0 / 3.0);
        let m = g.advance(start, Heading::East, &[], 15.0);
        assert!(!m.exited);
        assert_eq!(m.turns_used, 0);
        assert!((m.position.distance(&start) - 15.0).abs() < 1e-9);
    }

    #[test]
    fn turn_applied_at_intersection() {
        let g = RoadGrid::new(1000.0);
        let c = 1000.0 / 3.0;
        let start = Point::new(c - 5.0, c);
        let m = g.advance(start, Heading::East, &[Turn::Left], 15.0);
        assert_eq!(m.heading, Heading::North);
        assert_eq!(m.turns_used, 1);
        assert!((m.position.x - c).abs() < 1e-9);
        assert!((m.position.y - (c + 10.0)).abs() < 1e-9);
    }

    #[test]
    fn leaving_the_area_is_reported() {
        let g = RoadGrid::new(1000.0);
        let c = 1000.0 / 3.0;
        let m = g.advance(Point::new(995.0, c), Heading::East, &[], 15.0);
        assert!(m.exited);
        assert_eq!(m.position, Point::new(1000.0, c));
    }

    #[test]
    fn random_positions_stay_on_roads() {
        let g = RoadGrid::new(1000.0);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let (p, h) = g.random_on_road(&mut rng);
            assert!(g.on_road(p));
            let turns: Vec<Turn> = (0..3).map(|_| Turn::random(&mut rng)).collect();
            let m = g.advance(p, h, &turns, 15.0);
            assert!(g.on_road(m.position), "{:?}", m);
        }
    }

    #[test]
    fn layout_is_inside_area() {
        for m in 1..6 {
            let sites = gnb_layout(1000.0, m);
            assert_eq!(sites.len(), m);
            for s in sites {
                assert!((0.0..=1000.0).contains(&s.x) && (0.0..=1000.0).contains(&s.y));
            }
        }
    }
}
