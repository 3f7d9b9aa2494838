//! Closed label sets shared by the world model, the scene graph and the query DSL.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::geometry::Compass;

macro_rules! label_enum {
    ($(#[$meta:meta])* $name:ident { $($variant:ident => $label:literal),+ $(,)? }) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
        pub enum $name {
            $(#[serde(rename = $label)] $variant),+
        }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn as_str(self) -> &'static str {
                match self {
                    $($name::$variant => $label),+
                }
            }

            pub fn allowed() -> String {
                Self::ALL.iter().map(|v| v.as_str()).collect::<Vec<_>>().join(", ")
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }

        impl FromStr for $name {
            type Err = String;
            fn from_str(s: &str) -> Result<Self, Self::Err> {
                let t = s.trim();
                Self::ALL
                    .iter()
                    .copied()
                    .find(|v| v.as_str().eq_ignore_ascii_case(t))
                    .ok_or_else(|| {
                        format!("unknown {} `{}`, allowed: {}", stringify!($name), t, Self::allowed())
                    })
            }
        }
    };
}

label_enum!(
    /// Object class set for scene objects and object nodes.
    ObjectClass {
        Vehicle => "vehicle",
        Road => "road",
        Building => "building",
        ParkingLot => "parking_lot",
        GreenSpace => "green_space",
        Tree => "tree",
        SportsField => "sports_field",
    }
);

label_enum!(
    /// Observable color attribute.
    Color {
        White => "white",
        Black => "black",
        Red => "red",
        Gray => "gray",
        Blue => "blue",
        Green => "green",
        Brown => "brown",
        Silver => "silver",
    }
);

label_enum!(
    /// Edge labels allowed in the scene graph.
    Relation {
        Contains => "contains",
        AdjacentTo => "adjacent_to",
        NearCorner => "near_corner",
        NorthOf => "north_of",
        SouthOf => "south_of",
        EastOf => "east_of",
        WestOf => "west_of",
        NortheastOf => "northeast_of",
        NorthwestOf => "northwest_of",
        SoutheastOf => "southeast_of",
        SouthwestOf => "southwest_of",
    }
);

label_enum!(
    /// Coarse size bucket derived from an object's footprint extent.
    SizeClass {
        Small => "small",
        Medium => "medium",
        Large => "large",
    }
);

impl Relation {
    pub fn directional(c: Compass) -> Relation {
        match c {
            Compass::North => Relation::NorthOf,
            Compass::Northeast => Relation::NortheastOf,
            Compass::East => Relation::EastOf,
            Compass::Southeast => Relation::SoutheastOf,
            Compass::South => Relation::SouthOf,
            Compass::Southwest => Relation::SouthwestOf,
            Compass::West => Relation::WestOf,
            Compass::Northwest => Relation::NorthwestOf,
        }
    }

    pub fn is_directional(self) -> bool {
        !matches!(
            self,
            Relation::Contains | Relation::AdjacentTo | Relation::NearCorner
        )
    }
}

impl SizeClass {
    /// Longest side < 2.5 m is small, <= 6 m medium, otherwise large.
    pub fn from_extent(extent: [f64; 2]) -> SizeClass {
        let longest = extent[0].max(extent[1]);
        if longest < 2.5 {
            SizeClass::Small
        } else if longest <= 6.0 {
            SizeClass::Medium
        } else {
            SizeClass::Large
        }
    }
}

impl Color {
    /// Accepts British spelling of gray.
    pub fn parse_word(word: &str) -> Option<Color> {
        match word.to_ascii_lowercase().as_str() {
            "grey" => Some(Color::Gray),
            w => w.parse().ok(),
        }
    }
}

impl ObjectClass {
    /// Typical footprint extent in meters.
    pub fn typical_extent(self) -> [f64; 2] {
        match self {
            ObjectClass::Vehicle => [4.5, 2.0],
            ObjectClass::Road => [30.0, 8.0],
            ObjectClass::Building => [14.0, 12.0],
            ObjectClass::ParkingLot => [24.0, 18.0],
            ObjectClass::GreenSpace => [20.0, 20.0],
            ObjectClass::Tree => [5.0, 5.0],
            ObjectClass::SportsField => [40.0, 24.0],
        }
    }

    /// Instruction nouns that name this class.
    pub fn from_noun(noun: &str) -> Option<ObjectClass> {
        Some(match noun.to_ascii_lowercase().as_str() {
            "car" | "cars" | "vehicle" | "vehicles" | "truck" | "van" | "bus" | "suv" => {
                ObjectClass::Vehicle
            }
            "road" | "street" | "lane" => ObjectClass::Road,
            "building" | "house" | "shed" | "tower" => ObjectClass::Building,
            "parking_lot" | "carpark" => ObjectClass::ParkingLot,
            "green_space" | "park" | "lawn" | "garden" => ObjectClass::GreenSpace,
            "tree" | "trees" => ObjectClass::Tree,
            "sports_field" | "pitch" | "court" => ObjectClass::SportsField,
            _ => return None,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn labels_round_trip() {
        for r in Relation::ALL {
            assert_eq!(r.as_str().parse::<Relation>().unwrap(), *r);
            let j = serde_json::to_string(r).unwrap();
            assert_eq!(serde_json::from_str::<Relation>(&j).unwrap(), *r);
        }
        assert_eq!(
            "PARKING_LOT".parse::<ObjectClass>(),
            Ok(ObjectClass::ParkingLot)
        );
    }

    #[test]
    fn unknown_label_lists_allowed_set() {
        let err = "boat".parse::<ObjectClass>().unwrap_err();
        assert!(err.contains("vehicle") && err.contains("green_space"));
    }

    #[test]
    fn size_buckets() {
        assert_eq!(SizeClass::from_extent([1.0, 2.0]), SizeClass::Small);
        assert_eq!(SizeClass::from_extent([4.5, 2.0]), SizeClass::Medium);
        assert_eq!(SizeClass::from_extent([14.0, 12.0]), SizeClass::Large);
    }

    #[test]
    fn directional_mapping() {
        assert_eq!(
            Relation::directional(Compass::Northeast),
            Relation::NortheastOf
        );
        assert!(Relation::NorthOf.is_directional());
        assert!(!Relation::AdjacentTo.is_directional());
        assert_eq!(Color::parse_word("Grey"), Some(Color::Gray));
    }
}
