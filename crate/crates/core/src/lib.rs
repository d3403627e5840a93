// SPDX-License-Identifier: Apache-2.0

pub mod experiment;
pub mod gv;
pub mod harness;
pub mod lang;
pub mod meta;
pub mod oracle;
pub mod patch;
pub mod syn;
pub mod testgen;
