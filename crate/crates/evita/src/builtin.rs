//! Instances shipped with the crate.

use evita_core::instance::{Distribution, Instance};

use crate::formats::{parse_instance, FormatError, InstanceFile};

#[derive(Debug, Clone, Copy)]
pub struct BuiltinInstance {
    /// Short identifier used in configs and result files.
    pub id: &'static str,
    pub file: &'static str,
    pub distribution: Distribution,
    pub text: &'static str,
}

macro_rules! bundled {
    ($id:literal, $file:literal, $dist:ident) => {
        BuiltinInstance {
            id: $id,
            file: $file,
            distribution: Distribution::$dist,
            text: include_str!(concat!("../data/instances/", $file)),
        }
    };
}

pub const BUILTINS: &[BuiltinInstance] = &[
    bundled!("A32", "A-n32-k5.vrp", Uniform),
    bundled!("A33", "A-n33-k5.vrp", Uniform),
    bundled!("A69", "A-n69-k9.vrp", Uniform),
    bundled!("A80", "A-n80-k10.vrp", Uniform),
    bundled!("B35", "B-n35-k5.vrp", Clusters),
    bundled!("B45", "B-n45-k5.vrp", Clusters),
    bundled!("B67", "B-n67-k10.vrp", Clusters),
    bundled!("B68", "B-n68-k9.vrp", Clusters),
    bundled!("P100", "P-n101-k4.vrp", Uniform),
    bundled!("X200", "c1_2_1.txt", Clusters),
    bundled!("S8", "S-n9-k2.vrp", Uniform),
];

/// Looks up a bundled instance by id or file name (with or without
/// extension), ignoring case.
pub fn find(key: &str) -> Option<&'static BuiltinInstance> {
    let key = key.to_ascii_lowercase();
    BUILTINS.iter().find(|b| {
        let file = b.file.to_ascii_lowercase();
        let stem = file.rsplit_once('.').map_or(file.as_str(), |(s, _)| s);
        b.id.to_ascii_lowercase() == key || file == key || stem == key
    })
}

impl BuiltinInstance {
    pub fn parse(&self) -> Result<InstanceFile, FormatError> {
        parse_instance(self.text)
    }

    pub fn load(&self) -> Result<Instance, FormatError> {
        self.parse()?.into_instance(self.id, self.distribution)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_builtin_parses() {
        for b in BUILTINS {
            let inst = b.load().unwrap();
            assert!(inst.n_shops() >= 8, "{}", b.id);
        }
        assert_eq!(find("a-n32-k5").unwrap().id, "A32");
        assert_eq!(find("C1_2_1.txt").unwrap().id, "X200");
        assert!(find("nope").is_none());
    }
}
