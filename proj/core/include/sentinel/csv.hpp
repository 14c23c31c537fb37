#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "sentinel/isolation.hpp"
#include "sentinel/model.hpp"

namespace sentinel {

// k,x1..xn,y1..yp,a1..ap,m1..mp
void write_trace_csv(std::ostream& out, const Trace& trace);
// Inputs are not part of the file; the returned trace has empty u vectors.
Trace read_trace_csv(std::istream& in);

// k,sigma,pi_<J>...,xhat1..xhatn,e_norm
void write_bank_csv(std::ostream& out, const BankLog& log);
BankLog read_bank_csv(std::istream& in);

// window_index,winner_subset,accused_sensors,n_<J>...,first_step,last_step,separation,trustworthy
void write_isolation_csv(std::ostream& out, const IsolationReport& report);
IsolationReport read_isolation_csv(std::istream& in);

// Column meanings for every CSV written above.
nlohmann::json column_dictionary();

std::vector<std::string> split_csv_line(const std::string& line);

}  // namespace sentinel
