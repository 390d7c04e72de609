#ifndef QISD_CSV_HPP
#define QISD_CSV_HPP

#include <cstdio>
#include <string>
#include <vector>

#include "qisd/errors.hpp"

namespace qisd {

// Round-trip precision CSV writer (17 significant digits) so reruns are
// byte-comparable.
class CsvWriter {
  public:
    CsvWriter(const std::string& path, const std::vector<std::string>& columns)
        : path_(path), n_cols_(columns.size()) {
        file_ = std::fopen(path.c_str(), "wb");
        if (!file_) throw IoError("cannot open " + path + " for writing");
        for (std::size_t i = 0; i < columns.size(); ++i)
            std::fprintf(file_, "%s%s", columns[i].c_str(),
                         i + 1 == columns.size() ? "\n" : ",");
    }

    CsvWriter(const CsvWriter&) = delete;
    CsvWriter& operator=(const CsvWriter&) = delete;

    ~CsvWriter() {
        if (file_) std::fclose(file_);
    }

    void row(const std::vector<double>& values) {
        if (values.size() != n_cols_)
            throw IoError("csv row width mismatch in " + path_);
        for (std::size_t i = 0; i < values.size(); ++i)
            std::fprintf(file_, "%.17g%s", values[i], i + 1 == values.size() ? "\n" : ",");
    }

    void row_with_id(std::size_t id, const std::vector<double>& values) {
        if (values.size() + 1 != n_cols_)
            throw IoError("csv row width mismatch in " + path_);
        std::fprintf(file_, "%zu", id);
        for (double v : values) std::fprintf(file_, ",%.17g", v);
        std::fprintf(file_, "\n");
    }

    void close() {
        if (file_) {
            std::fclose(file_);
            file_ = nullptr;
        }
    }

  private:
    std::string path_;
    std::size_t n_cols_;
    std::FILE* file_ = nullptr;
};

} // namespace qisd

#endif
