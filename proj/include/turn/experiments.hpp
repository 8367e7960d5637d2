#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

namespace turn {

struct ExperimentLine {
  std::string id;  // "E1-A", "E4-3", ...
  bool pass = false;
  std::string detail;
  std::vector<std::string> notes;  // extra indented lines under the result
};

// "E3-3 PASS: detail" followed by any notes, one per line.
std::string format_line(const ExperimentLine& line);

// Runs the five experiment suites (credentials, confidence, context, memory,
// durability) against the mock driver. `scratch` holds snapshot files.
// `on_line` sees each result as soon as it is known.
std::vector<ExperimentLine> run_experiments(const std::filesystem::path& scratch,
                                            const std::function<void(const ExperimentLine&)>& on_line = {});

// Memory benchmark shared with the acceptance suite: median ns per remember
// and per recall, each measured as one iteration of an interpreted loop that
// also builds the key, with K entries resident. Reads visit keys in a seeded
// random order (seed 0 keeps insertion order).
struct MemoryTiming {
  double write_ns = 0;
  double read_ns = 0;
};
MemoryTiming time_memory(std::size_t k, unsigned seed = 7);

}  // namespace turn
