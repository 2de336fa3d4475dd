/// A named test function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegistryEntry {
    pub name: &'static str,
    pub source: &'static str,
    /// Lipschitz on `[0, 1]`.
    pub lipschitz: bool,
    /// Nonnegative on `[0, 1]`.
    pub nonnegative: bool,
}

const fn entry(name: &'static str, source: &'static str) -> RegistryEntry {
    RegistryEntry { name, source, lipschitz: true, nonnegative: true }
}

const REGISTRY: [RegistryEntry; 9] = [
    entry("e0", "1"),
    entry("e1", "x"),
    entry("x2", "x^2"),
    entry("x_lnmu", "x*lnmu(x)"),
    entry("lnmu", "lnmu(x)"),
    entry("sin_pi", "sin(pi*x)"),
    entry("exp", "exp(x)"),
    entry("abs_half", "abs(x - 0.5)"),
    // In W^{1,p} for every p but not C^1.
    entry("hat", "max(0, 1 - abs(4*x - 2))"),
];

pub fn registry() -> &'static [RegistryEntry] {
    &REGISTRY
}

pub fn registry_entry(name: &str) -> Option<&'static RegistryEntry> {
    REGISTRY.iter().find(|e| e.name == name)
}
