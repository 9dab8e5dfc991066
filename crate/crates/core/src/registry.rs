//! Name-keyed collections of interchangeable algorithm variants.

use crate::error::{Error, Result};

pub trait Named {
    fn name(&self) -> &'static str;
}

pub struct Registry<T: ?Sized + Named> {
    kind: &'static str,
    entries: Vec<Box<T>>,
}

impl<T: ?Sized + Named> Registry<T> {
    pub fn new(kind: &'static str) -> Self {
        Registry { kind, entries: Vec::new() }
    }

    /// Adds a variant; a later registration under the same name replaces the earlier one.
    pub fn register(&mut self, entry: Box<T>) -> &mut Self {
        self.entries.retain(|e| e.name() != entry.name());
        self.entries.push(entry);
        self
    }

    pub fn get(&self, name: &str) -> Result<&T> {
        self.entries
            .iter()
            .find(|e| e.name() == name)
            .map(|b| b.as_ref())
            .ok_or_else(|| Error::UnknownStrategy {
                kind: self.kind,
                name: name.to_string(),
            })
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.entries.iter().map(|e| e.name()).collect()
    }

    pub fn kind(&self) -> &'static str {
        self.kind
    }
}

impl<T: ?Sized + Named> std::fmt::Debug for Registry<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Registry").field("kind", &self.kind).field("entries", &self.names()).finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    trait Greeter: Named {
        fn greet(&self) -> String;
    }

    struct Plain(&'static str);

    impl Named for Plain {
        fn name(&self) -> &'static str {
            self.0
        }
    }

    impl Greeter for Plain {
        fn greet(&self) -> String {
            format!("hello from {}", self.0)
        }
    }

    #[test]
    fn lookup_and_replace() {
        let mut reg: Registry<dyn Greeter> = Registry::new("greeter");
        reg.register(Box::new(Plain("a"))).register(Box::new(Plain("b")));
        assert_eq!(reg.get("b").unwrap().greet(), "hello from b");
        reg.register(Box::new(Plain("a")));
        assert_eq!(reg.names(), vec!["b", "a"]);
        assert!(matches!(reg.get("c"), Err(Error::UnknownStrategy { .. })));
    }
}
