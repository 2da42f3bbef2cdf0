#include "crowdmf/csv.hpp"

#include <charconv>
#include <cmath>
#include <system_error>

#include "crowdmf/rng.hpp"
#include "crowdmf/version.hpp"

namespace crowdmf {

std::string fmt_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[40];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  (void)ec;
  return std::string(buf, ptr);
}

std::string fmt_int(std::int64_t x) {
  char buf[24];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  (void)ec;
  return std::string(buf, ptr);
}

void write_csv_row(std::ostream& os, const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) os << ',';
    os << fields[i];
  }
  os << '\n';
}

void write_metadata_block(std::ostream& os, const std::string& experiment,
                          const std::string& config_echo, std::uint64_t seed) {
  os << "# artifact_version: " << kArtifactVersion << '\n';
  os << "# experiment: " << experiment << '\n';
  os << "# rng: " << kRngName << '\n';
  os << "# seed: " << seed << '\n';
  os << "# config: " << config_echo << '\n';
}

}  // namespace crowdmf
