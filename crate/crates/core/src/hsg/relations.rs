//! Geometric edge-labeling rules.

use crate::geometry::{bearing_and_distance, Compass, Polygon, WorldPoint};
use crate::vocab::Relation;

/// Landmark-object edges exist only for landmarks within this boundary distance.
pub const LANDMARK_EDGE_RADIUS: f64 = 30.0;
pub const ADJACENT_RADIUS: f64 = 10.0;
pub const CORNER_RADIUS: f64 = 10.0;
pub const OBJECT_ADJACENT_RADIUS: f64 = 8.0;
pub const OBJECT_DIRECTIONAL_RADIUS: f64 = 30.0;

/// Relation of a point to a landmark contour:
/// contains > near_corner > adjacent_to > directional (bearing from the centroid).
pub fn landmark_relation(p: &WorldPoint, contour: &Polygon) -> Relation {
    if contour.contains(p) {
        return Relation::Contains;
    }
    if contour.nearest_vertex_distance(p) < CORNER_RADIUS {
        return Relation::NearCorner;
    }
    if contour.boundary_distance(p) < ADJACENT_RADIUS {
        return Relation::AdjacentTo;
    }
    let (_, bearing) = bearing_and_distance(&contour.centroid(), p);
    Relation::directional(Compass::from_bearing(bearing))
}

/// [`landmark_relation`] restricted to landmarks within [`LANDMARK_EDGE_RADIUS`].
pub fn landmark_edge(p: &WorldPoint, contour: &Polygon) -> Option<Relation> {
    if contour.distance_to(p) <= LANDMARK_EDGE_RADIUS {
        Some(landmark_relation(p, contour))
    } else {
        None
    }
}

/// Relation of `b` relative to `a`, or none beyond the directional cutoff.
pub fn object_relation(a: &WorldPoint, b: &WorldPoint) -> Option<Relation> {
    let (d, bearing) = bearing_and_distance(a, b);
    if d < OBJECT_ADJACENT_RADIUS {
        Some(Relation::AdjacentTo)
    } else if d < OBJECT_DIRECTIONAL_RADIUS {
        Some(Relation::directional(Compass::from_bearing(bearing)))
    } else {
        None
    }
}
