#include "raclab/io.hpp"

#include <cmath>
#include <cstdio>

#include "raclab/common.hpp"

namespace raclab {

nlohmann::json json_number(double x)
{
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    return x;
}

nlohmann::json json_numbers(const std::vector<double>& xs)
{
    auto arr = nlohmann::json::array();
    for (double x : xs) arr.push_back(json_number(x));
    return arr;
}

double number_from_json(const nlohmann::json& v)
{
    if (v.is_number()) return v.get<double>();
    if (v.is_string()) {
        const auto s = v.get<std::string>();
        if (s == "inf") return kInf;
        if (s == "-inf") return -kInf;
        if (s == "nan") return std::nan("");
    }
    throw InvalidArgument("expected a number, got " + v.dump());
}

std::string format_number(double x)
{
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", x);
    return buf;
}

CsvWriter::CsvWriter(std::ostream& os, const std::vector<std::string>& header, const std::string& units)
    : os_(os), columns_(header.size())
{
    os_ << "# units: " << units << '\n';
    for (std::size_t i = 0; i < header.size(); ++i) os_ << (i ? "," : "") << header[i];
    os_ << '\n';
}

void CsvWriter::sep()
{
    if (col_++ > 0) os_ << ',';
}

CsvWriter& CsvWriter::operator<<(double x)
{
    sep();
    os_ << format_number(x);
    return *this;
}

CsvWriter& CsvWriter::operator<<(long long x)
{
    sep();
    os_ << x;
    return *this;
}

CsvWriter& CsvWriter::operator<<(unsigned long long x)
{
    sep();
    os_ << x;
    return *this;
}

CsvWriter& CsvWriter::operator<<(const std::string& s)
{
    sep();
    os_ << s;
    return *this;
}

void CsvWriter::end_row()
{
    if (col_ != columns_) throw std::logic_error("CSV row has the wrong number of columns");
    os_ << '\n';
    col_ = 0;
}

}  // namespace raclab
