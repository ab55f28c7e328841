//! Reference oracles, random expression trees and the acceptance criteria
//! for the perfhom toolkit.

pub mod criteria;
pub mod exprgen;
pub mod oracles;
