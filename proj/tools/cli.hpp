#pragma once

#include "spatialplus/basis.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace spatialplus::cli {

// Exit codes shared by every subcommand.
enum ExitCode : int {
    exit_ok = 0,
    exit_internal = 1,
    exit_input = 2,
    exit_model = 3,
    exit_convergence = 4,
    exit_acceptance = 5,
};

constexpr unsigned long long default_seed = 20240601ULL;

// Comma-separated table with a header row. Cells are kept as text and only
// the requested columns are converted, so unused columns may hold anything.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    // First data line of the file is line 2.
    std::vector<int> line_numbers;

    static CsvTable read(std::istream& in, const std::string& source = "input");
    static CsvTable read_file(const std::string& path);

    int column(const std::string& name) const;
    // Throws InvalidInput naming the column or the offending line.
    MatrixXd numeric(const std::vector<std::string>& names) const;

    std::string source;
};

std::vector<std::string> split_list(const std::string& s);

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, char** argv);

}  // namespace spatialplus::cli
