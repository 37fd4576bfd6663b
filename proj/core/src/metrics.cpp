// SPDX-License-Identifier: Apache-2.0
//
// fdmimo: system-level simulation toolkit for FD-MIMO downlink
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#include "fdmimo/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <stdexcept>

namespace fdmimo {

double percentile(std::vector<double> values, double p) {
    if (values.empty()) {
        return 0.0;
    }
    std::sort(values.begin(), values.end());
    const auto n = static_cast<double>(values.size());
    long idx = static_cast<long>(std::ceil(p * n)) - 1;
    idx = std::max(0L, std::min(idx, static_cast<long>(values.size()) - 1));
    return values[static_cast<size_t>(idx)];
}

double mean(const std::vector<double>& values) {
    if (values.empty()) {
        return 0.0;
    }
    return std::accumulate(values.begin(), values.end(), 0.0) /
           static_cast<double>(values.size());
}

double sample_stddev(const std::vector<double>& values) {
    if (values.size() < 2) {
        return 0.0;
    }
    const double m = mean(values);
    double acc = 0.0;
    for (double v : values) {
        acc += (v - m) * (v - m);
    }
    return std::sqrt(acc / static_cast<double>(values.size() - 1));
}

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

struct CsvWriter::Impl {
    std::ofstream out;
    bool header_written = false;
};

CsvWriter::CsvWriter(const std::string& path) : impl_(new Impl) {
    impl_->out.open(path);
    if (!impl_->out) {
        delete impl_;
        throw std::runtime_error("CsvWriter: cannot open " + path);
    }
}

CsvWriter::~CsvWriter() { delete impl_; }

void CsvWriter::comment(const std::string& line) {
    impl_->out << "# " << line << "\n";
}

void CsvWriter::header(const std::vector<std::string>& columns) {
    row(columns);
    impl_->header_written = true;
}

void CsvWriter::row(const std::vector<std::string>& values) {
    for (size_t i = 0; i < values.size(); ++i) {
        if (i > 0) {
            impl_->out << ",";
        }
        impl_->out << values[i];
    }
    impl_->out << "\n";
}

void CsvWriter::row_numeric(const std::vector<double>& values) {
    std::vector<std::string> cols;
    cols.reserve(values.size());
    for (double v : values) {
        cols.push_back(format_double(v));
    }
    row(cols);
}

void CsvWriter::flush() { impl_->out.flush(); }

} // namespace fdmimo
