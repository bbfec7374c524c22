//! Per-prime verification that the pseudo-null conjecture holds along the
//! cyclotomic tower `Q(ζ_{p^n})`: irregular pairs, Iwasawa invariants of the
//! branch power series, Vandiver witnesses, and the resulting certificates.

pub mod bernoulli;
pub mod certificates;
pub mod cli;
pub mod iwasawa;
pub mod ntt;
pub mod padic;
pub mod primes;
pub mod scan;
pub mod vandiver;
