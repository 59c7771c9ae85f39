//! Geographic layouts: one depot plus a set of shops on the plane.
//!
//! Node `0` is always the depot; shops occupy nodes `1..=n_shops` in the
//! order they were read from the source file. Every other module addresses
//! shops by this node index.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

/// Node index of the depot.
pub const DEPOT: usize = 0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        libm::hypot(self.x - other.x, self.y - other.y)
    }
}

/// Spatial distribution class of an instance. Metadata only, assigned by
/// the experiment configuration rather than detected.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub enum Distribution {
    Uniform,
    Clusters,
    #[default]
    Unknown,
}

impl Distribution {
    pub fn as_str(&self) -> &'static str {
        match self {
            Distribution::Uniform => "uniform",
            Distribution::Clusters => "clusters",
            Distribution::Unknown => "unknown",
        }
    }
}

impl fmt::Display for Distribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl core::str::FromStr for Distribution {
    type Err = InstanceError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "uniform" => Ok(Distribution::Uniform),
            "clusters" | "cluster" | "clustered" => Ok(Distribution::Clusters),
            "unknown" | "" => Ok(Distribution::Unknown),
            other => Err(InstanceError::UnknownDistribution(other.into())),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum InstanceError {
    NoShops,
    NonFiniteCoordinate { node: usize },
    UnknownDistribution(String),
}

impl fmt::Display for InstanceError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InstanceError::NoShops => write!(f, "instance has no shops"),
            InstanceError::NonFiniteCoordinate { node } => {
                write!(f, "node {node} has a non-finite coordinate")
            }
            InstanceError::UnknownDistribution(s) => write!(f, "unknown distribution class `{s}`"),
        }
    }
}

impl core::error::Error for InstanceError {}

/// A problem layout. Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    id: String,
    points: Vec<Point>,
    distribution: Distribution,
}

impl Instance {
    /// Builds an instance from a depot and its shops.
    pub fn new(
        id: impl Into<String>,
        depot: Point,
        shops: impl IntoIterator<Item = Point>,
        distribution: Distribution,
    ) -> Result<Self, InstanceError> {
        let mut points = Vec::new();
        points.push(depot);
        points.extend(shops);
        if points.len() < 2 {
            return Err(InstanceError::NoShops);
        }
        if let Some(node) = points
            .iter()
            .position(|p| !p.x.is_finite() || !p.y.is_finite())
        {
            return Err(InstanceError::NonFiniteCoordinate { node });
        }
        Ok(Self {
            id: id.into(),
            points,
            distribution,
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn distribution(&self) -> Distribution {
        self.distribution
    }

    pub fn with_distribution(mut self, distribution: Distribution) -> Self {
        self.distribution = distribution;
        self
    }

    pub fn n_shops(&self) -> usize {
        self.points.len() - 1
    }

    pub fn depot(&self) -> Point {
        self.points[DEPOT]
    }

    /// All nodes, depot first.
    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn shops(&self) -> &[Point] {
        &self.points[1..]
    }

    /// Node indices of the shops.
    pub fn shop_nodes(&self) -> core::ops::RangeInclusive<usize> {
        1..=self.n_shops()
    }

    pub fn distance_matrix(&self) -> DistanceMatrix {
        DistanceMatrix::euclidean(&self.points)
    }

    /// Distance from the depot to the centroid of the shops (depot excluded
    /// from the mean).
    pub fn eccentricity(&self) -> f64 {
        let shops = self.shops();
        let n = shops.len() as f64;
        let (sx, sy) = shops
            .iter()
            .fold((0.0, 0.0), |(sx, sy), p| (sx + p.x, sy + p.y));
        self.depot().distance(&Point::new(sx / n, sy / n))
    }
}

/// Symmetric matrix of unrounded Euclidean distances between nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    n: usize,
    d: Vec<f64>,
}

impl DistanceMatrix {
    pub fn euclidean(points: &[Point]) -> Self {
        let n = points.len();
        let mut d = alloc::vec![0.0; n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                let v = points[i].distance(&points[j]);
                d[i * n + j] = v;
                d[j * n + i] = v;
            }
        }
        Self { n, d }
    }

    /// Number of nodes, depot included.
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.d[i * self.n + j]
    }

    /// Clarke & Wright saving of visiting `j` right after `i` instead of
    /// returning to the depot in between.
    #[inline]
    pub fn saving(&self, i: usize, j: usize) -> f64 {
        self.get(i, DEPOT) + self.get(DEPOT, j) - self.get(i, j)
    }
}
