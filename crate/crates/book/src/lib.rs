//! Guide chapters compiled as doctests.

#[doc = include_str!("../../../book/src/intro.md")]
mod intro {}

#[doc = include_str!("../../../book/src/eigenforms.md")]
mod eigenforms {}

#[doc = include_str!("../../../book/src/lfunctions.md")]
mod lfunctions {}

#[doc = include_str!("../../../book/src/petersson.md")]
mod petersson {}

#[doc = include_str!("../../../book/src/mertens.md")]
mod mertens {}

#[doc = include_str!("../../../book/src/harper.md")]
mod harper {}

#[doc = include_str!("../../../book/src/moments.md")]
mod moments {}

#[doc = include_str!("../../../book/src/cli.md")]
mod cli {}
