#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace headliner::io {

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

std::vector<std::string> read_lines(const std::string& path);
void write_lines(const std::string& path, const std::vector<std::string>& lines);

// Streams a file line by line (LF or CRLF); a leading UTF-8 BOM is
// dropped. Keeps memory flat on corpus-sized files.
void for_each_line(const std::string& path,
                   const std::function<void(const std::string&)>& fn);

// RFC-4180: quoted fields may contain commas, newlines and doubled
// quotes. Returns one vector of fields per record. Throws on an
// unclosed quote (a stray quote inside an unquoted field is tolerated).
std::vector<std::vector<std::string>> parse_csv(const std::string& content, char delim = ',');

std::vector<std::vector<std::string>> read_csv(const std::string& path, char delim = ',');

// Streaming variant of read_csv.
void for_each_csv_row(const std::string& path,
                      const std::function<void(std::vector<std::string>&&)>& fn,
                      char delim = ',');

std::string csv_escape(const std::string& field, char delim = ',');

// 64-bit FNV-1a over the raw file bytes, as 16 hex digits.
std::string file_digest(const std::string& path);

// Reproducibility record written next to each CLI run's primary output.
void write_run_manifest(const std::string& path, const std::string& command,
                        const std::vector<std::string>& argv,
                        const std::vector<std::pair<std::string, std::string>>& config,
                        const std::vector<std::string>& input_files,
                        std::uint64_t seed);

// Runs fn(i) for i in [0, n) on up to jobs threads. Order of side
// effects across i is unspecified; callers write to preallocated slots.
void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn);

}  // namespace headliner::io
