#pragma once

#include <string>

#include "torusot/experiments.hpp"

namespace torusot {

// UTC tag YYYYMMDD-HHMMSS used in output file names.
std::string timestamp_tag();

// "<name>.<tag>.<ext>", or "<name>.<ext>" when deterministic naming is on.
std::string output_name(const std::string& name, const std::string& ext, bool deterministic);

// Writes contents to a sibling temp file and renames it over path, so readers
// never observe a partial file. Setting TORUS_OT_LAB_CRASH_BEFORE_RENAME=1
// aborts the process between write and rename (crash-injection seam).
void atomic_write(const std::string& path, const std::string& contents);

// One row per replicate: d,p,n,replicate,seed,h,wasserstein,solver,runtime_ms.
std::string rate_csv(const RateReport& report);

}  // namespace torusot
