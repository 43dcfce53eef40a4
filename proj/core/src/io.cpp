#include "torusot/io.hpp"

#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <stdexcept>

namespace torusot {

std::string timestamp_tag() {
  std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y%m%d-%H%M%S", &tm);
  return buf;
}

std::string output_name(const std::string& name, const std::string& ext, bool deterministic) {
  if (deterministic) return name + "." + ext;
  return name + "." + timestamp_tag() + "." + ext;
}

void atomic_write(const std::string& path, const std::string& contents) {
  std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("atomic_write: cannot open " + tmp);
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    out.flush();
    if (!out) throw std::runtime_error("atomic_write: short write to " + tmp);
  }
  if (const char* crash = std::getenv("TORUS_OT_LAB_CRASH_BEFORE_RENAME");
      crash && crash[0] == '1') {
    std::_Exit(86);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    std::remove(tmp.c_str());
    throw std::runtime_error("atomic_write: rename failed for " + path);
  }
}

std::string rate_csv(const RateReport& report) {
  std::string out = "d,p,n,replicate,seed,h,wasserstein,solver,runtime_ms\n";
  char buf[256];
  for (const RatePoint& pt : report.points) {
    for (std::size_t r = 0; r < pt.replicates.size(); ++r) {
      unsigned long long seed = r < pt.seeds.size() ? pt.seeds[r] : 0ull;
      double runtime = r < pt.runtimes_ms.size() ? pt.runtimes_ms[r] : 0.0;
      std::snprintf(buf, sizeof(buf), "%d,%.17g,%lld,%zu,%llu,%.17g,%.17g,%s,%.17g\n", report.d,
                    report.p, static_cast<long long>(pt.n), r, seed, pt.h, pt.replicates[r],
                    report.solver.c_str(), runtime);
      out += buf;
    }
  }
  return out;
}

}  // namespace torusot
