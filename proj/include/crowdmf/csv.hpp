#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

namespace crowdmf {

// Shortest round-trip decimal representation (std::to_chars), so CSV output
// is bit-stable across runs and platforms.
std::string fmt_double(double x);

std::string fmt_int(std::int64_t x);

// Joins already-formatted fields with ',' and LF.
void write_csv_row(std::ostream& os, const std::vector<std::string>& fields);

// Metadata block prepended to every output file: '# key: value' lines.
// config_echo is a single-line JSON document describing the run.
void write_metadata_block(std::ostream& os, const std::string& experiment,
                          const std::string& config_echo, std::uint64_t seed);

}  // namespace crowdmf
