// Copyright 2026 The critical-prep Authors
// SPDX-License-Identifier: Apache-2.0

fn main() {
    std::process::exit(critical_prep::cli::run(std::env::args_os()));
}
