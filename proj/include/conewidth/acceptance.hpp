#pragma once

#include <iosfwd>
#include <string>

namespace conewidth {

struct AcceptanceOptions {
    std::string out_dir = "acceptance_out";
    bool skip_slow = false;  // leaves out criteria 4, 5, 7, 9 (debug aid)
};

/// Runs the acceptance criteria, printing one pass/fail line per criterion and
/// writing report files under out_dir. Returns the number of failed criteria.
int run_acceptance(std::ostream& log, const AcceptanceOptions& opts);

}  // namespace conewidth
