#pragma once

#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace cavheat::csv {

/// Shortest round-trip decimal form; identical runs give identical bytes.
inline std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

class Writer {
  public:
    explicit Writer(const std::string& path) : out_(path, std::ios::binary) {
        if (!out_) throw std::runtime_error("cannot open output file: " + path);
    }
    void header(const std::string& h) { out_ << h << "\n"; }
    void row(const std::vector<double>& values) {
        for (std::size_t i = 0; i < values.size(); ++i) {
            if (i) out_ << ",";
            out_ << num(values[i]);
        }
        out_ << "\n";
    }
    void raw(const std::string& line) { out_ << line << "\n"; }

  private:
    std::ofstream out_;
};

}  // namespace cavheat::csv
