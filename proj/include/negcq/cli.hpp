#pragma once

#include "negcq/engine.hpp"

#include <iosfwd>
#include <json.hpp>

namespace negcq::cli {

using Json = nlohmann::ordered_json;

// Exit codes: 0 ok, 2 usage, 3 budget, 4 internal.
int exit_code(ErrorKind k);

// Dispatches `negcq <subcommand> ...`; argv[0] is the program name.
int main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

// CSVs of `dir`, with columns the query compares sharing one dictionary.
Database load_database(const std::string& dir, const QueryIR& ir, char delim = ',');

// Inline text when `arg` is not an existing file.
std::string read_query_text(const std::string& arg);

std::string answers_csv(const QueryIR& ir, const Database& db, const Answer& ans);

Json report_json(const QueryIR& ir, const Database& db, const Answer& ans, bool timings);

// Query C workload: R(X, X mod y), S(Z mod y, Z), T = {(i,i),(i,i+1)} over [N].
Database query_c_database(std::size_t N, std::size_t y_domain);
inline const char* query_c_text() { return "C() :- R(X,Y), S(Y,Z), !T(X,Z)."; }

}  // namespace negcq::cli
