use rstar::primitives::{GeomWithData, Rectangle};
use rstar::{RTree, AABB};

use super::NodeId;
use crate::geometry::Rect;

type Entry = GeomWithData<Rectangle<[f64; 2]>, NodeId>;

fn entry(id: NodeId, r: &Rect) -> Entry {
    GeomWithData::new(
        Rectangle::from_corners([r.min_x, r.min_y], [r.max_x, r.max_y]),
        id,
    )
}

/// R-tree over node bounding boxes.
#[derive(Debug, Clone, Default)]
pub struct SpatialIndex {
    tree: RTree<Entry>,
}

impl SpatialIndex {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn bulk(items: impl IntoIterator<Item = (NodeId, Rect)>) -> Self {
        SpatialIndex {
            tree: RTree::bulk_load(items.into_iter().map(|(id, r)| entry(id, &r)).collect()),
        }
    }

    pub fn insert(&mut self, id: NodeId, bbox: &Rect) {
        self.tree.insert(entry(id, bbox));
    }

    pub fn remove(&mut self, id: NodeId, bbox: &Rect) -> bool {
        self.tree.remove(&entry(id, bbox)).is_some()
    }

    pub fn len(&self) -> usize {
        self.tree.size()
    }

    pub fn is_empty(&self) -> bool {
        self.tree.size() == 0
    }

    /// Ids whose box intersects `region` (closed), ascending.
    pub fn query(&self, region: &Rect) -> Vec<NodeId> {
        if region.is_empty() {
            return Vec::new();
        }
        let env = AABB::from_corners([region.min_x, region.min_y], [region.max_x, region.max_y]);
        let mut ids: Vec<NodeId> = self
            .tree
            .locate_in_envelope_intersecting(&env)
            .map(|e| e.data)
            .collect();
        ids.sort_unstable();
        ids
    }
}
