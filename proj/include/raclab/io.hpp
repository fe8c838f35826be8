#pragma once

#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

namespace raclab {

/// JSON has no infinities; they are written as the strings "inf" / "-inf"
/// (NaN as "nan").
nlohmann::json json_number(double x);
nlohmann::json json_numbers(const std::vector<double>& xs);

/// Inverse of json_number: accepts numbers and the three special strings.
double number_from_json(const nlohmann::json& v);

/// 12 significant digits, '.' decimal point, 'e' exponent; "inf"/"-inf"/"nan".
std::string format_number(double x);

/// Minimal CSV writer: a "# units:" comment line, a header row, then rows.
class CsvWriter {
public:
    CsvWriter(std::ostream& os, const std::vector<std::string>& header, const std::string& units);

    CsvWriter& operator<<(double x);
    CsvWriter& operator<<(long long x);
    CsvWriter& operator<<(unsigned long long x);
    CsvWriter& operator<<(int x) { return *this << static_cast<long long>(x); }
    CsvWriter& operator<<(unsigned x) { return *this << static_cast<unsigned long long>(x); }
    CsvWriter& operator<<(unsigned long x) { return *this << static_cast<unsigned long long>(x); }
    CsvWriter& operator<<(bool x) { return *this << static_cast<long long>(x ? 1 : 0); }
    CsvWriter& operator<<(const std::string& s);
    void end_row();

private:
    void sep();

    std::ostream& os_;
    std::size_t columns_;
    std::size_t col_ = 0;
};

}  // namespace raclab
