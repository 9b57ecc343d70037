#pragma once

#include <string>

#include "hsmm/model.hpp"

namespace hsmm {

struct CsvSchema {
    std::string y_col = "y";
    std::vector<std::string> x_cols;
    std::string session_col;  // empty: single session
    std::string time_col;     // empty: row order is trusted
    bool allow_gaps = false;  // with a time column, tolerate jumps > 1
    char delimiter = ',';
};

// Reads a series; session labels (any text) are mapped to 0..S-1 by first
// appearance and must form contiguous blocks. With a time column, rows must
// ascend by exactly 1 within a session unless allow_gaps. x0 defaults to the
// first row's covariates.
TimeSeriesData load_series_csv(const std::string& path, const CsvSchema& schema);

// Writes y, covariates, and session id with round-trip-exact formatting.
void write_series_csv(const std::string& path, const TimeSeriesData& data,
                      const CsvSchema& schema);

struct EngineerOptions {
    long long window = 20;
    std::vector<std::uint8_t> windowed;  // empty: first covariate only
    bool session_terms = true;
    bool standardize = true;
    Vec x0_override;  // empty: keep data.x0
};

// Resolves a design spec against the data: fills standardization constants
// (columnwise mean and sd), window flags, and optionally replaces x0. The
// covariate matrix itself is left untouched; standardization is applied when
// design rows are built.
DesignSpec engineer_covariates(TimeSeriesData& data, const EngineerOptions& opts);

}  // namespace hsmm
