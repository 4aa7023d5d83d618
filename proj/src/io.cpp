#include "headliner/io.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <nlohmann/json.hpp>

namespace headliner::io {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open file for writing: " + path);
    out << content;
    if (!out) throw std::runtime_error("write failed: " + path);
}

std::vector<std::string> read_lines(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open file: " + path);
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(line);
    }
    return lines;
}

void write_lines(const std::string& path, const std::vector<std::string>& lines) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open file for writing: " + path);
    for (const auto& l : lines) out << l << '\n';
    if (!out) throw std::runtime_error("write failed: " + path);
}

namespace {

// incremental RFC-4180 state machine; quoted fields may span feed chunks
class CsvParser {
public:
    explicit CsvParser(char delim) : delim_(delim) {}

    void feed(const char* data, std::size_t n,
              const std::function<void(std::vector<std::string>&&)>& emit) {
        for (std::size_t i = 0; i < n; ++i) {
            char c = data[i];
            if (at_start_) {
                // drop a UTF-8 byte-order mark
                if (bom_pos_ < 3 && c == "\xEF\xBB\xBF"[bom_pos_]) {
                    ++bom_pos_;
                    if (bom_pos_ == 3) at_start_ = false;
                    continue;
                }
                if (bom_pos_ > 0) {
                    for (std::size_t k = 0; k < bom_pos_; ++k) {
                        consume("\xEF\xBB\xBF"[k], emit);
                    }
                }
                at_start_ = false;
            }
            consume(c, emit);
        }
    }

    void finish(const std::function<void(std::vector<std::string>&&)>& emit) {
        if (in_quotes_) throw std::runtime_error("csv: unterminated quoted field");
        if (pending_cr_) {
            field_.push_back('\r');
            field_started_ = true;
            pending_cr_ = false;
        }
        if (field_started_ || !field_.empty() || !row_.empty()) end_row(emit);
    }

private:
    void consume(char c, const std::function<void(std::vector<std::string>&&)>& emit) {
        if (pending_cr_) {
            pending_cr_ = false;
            if (c == '\n') {
                end_row(emit);
                return;
            }
            field_.push_back('\r');
            field_started_ = true;
        }
        if (in_quotes_) {
            if (pending_quote_) {
                pending_quote_ = false;
                if (c == '"') {
                    field_.push_back('"');
                    return;
                }
                in_quotes_ = false;
                // fall through: the quote closed, reprocess c below
            } else if (c == '"') {
                pending_quote_ = true;
                return;
            } else {
                field_.push_back(c);
                return;
            }
        }
        if (c == '"' && !field_started_ && field_.empty()) {
            in_quotes_ = true;
            field_started_ = true;
        } else if (c == delim_) {
            end_field();
        } else if (c == '\r') {
            pending_cr_ = true;
        } else if (c == '\n') {
            end_row(emit);
        } else {
            field_.push_back(c);
            field_started_ = true;
        }
    }

    void end_field() {
        row_.push_back(std::move(field_));
        field_.clear();
        field_started_ = false;
    }

    void end_row(const std::function<void(std::vector<std::string>&&)>& emit) {
        end_field();
        emit(std::move(row_));
        row_.clear();
    }

    char delim_;
    std::vector<std::string> row_;
    std::string field_;
    bool in_quotes_ = false;
    bool field_started_ = false;
    bool pending_quote_ = false;
    bool pending_cr_ = false;
    bool at_start_ = true;
    std::size_t bom_pos_ = 0;
};

}  // namespace

std::vector<std::vector<std::string>> parse_csv(const std::string& content, char delim) {
    std::vector<std::vector<std::string>> rows;
    CsvParser parser(delim);
    auto emit = [&](std::vector<std::string>&& row) { rows.push_back(std::move(row)); };
    parser.feed(content.data(), content.size(), emit);
    parser.finish(emit);
    return rows;
}

std::vector<std::vector<std::string>> read_csv(const std::string& path, char delim) {
    return parse_csv(read_file(path), delim);
}

void for_each_csv_row(const std::string& path,
                      const std::function<void(std::vector<std::string>&&)>& fn,
                      char delim) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open file: " + path);
    CsvParser parser(delim);
    std::vector<char> buf(1 << 20);
    while (in) {
        in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
        const auto got = static_cast<std::size_t>(in.gcount());
        if (got == 0) break;
        parser.feed(buf.data(), got, fn);
    }
    parser.finish(fn);
}

void for_each_line(const std::string& path,
                   const std::function<void(const std::string&)>& fn) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open file: " + path);
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (first) {
            first = false;
            if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
        }
        fn(line);
    }
}

std::string csv_escape(const std::string& field, char delim) {
    bool needs = field.find_first_of(std::string("\"\r\n") + delim) != std::string::npos;
    if (!needs) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += "\"\"";
        else out.push_back(c);
    }
    out.push_back('"');
    return out;
}

std::string file_digest(const std::string& path) {
    const std::string data = read_file(path);
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

void write_run_manifest(const std::string& path, const std::string& command,
                        const std::vector<std::string>& argv,
                        const std::vector<std::pair<std::string, std::string>>& config,
                        const std::vector<std::string>& input_files,
                        std::uint64_t seed) {
    nlohmann::json j;
    j["command"] = command;
    j["argv"] = argv;
    j["seed"] = seed;
    nlohmann::json cfg = nlohmann::json::object();
    for (const auto& [k, v] : config) cfg[k] = v;
    j["config"] = cfg;
    nlohmann::json digests = nlohmann::json::object();
    for (const auto& f : input_files) {
        try {
            digests[f] = "fnv1a64:" + file_digest(f);
        } catch (const std::exception&) {
            digests[f] = "unreadable";
        }
    }
    j["input_digests"] = digests;
    write_file(path, j.dump(2) + "\n");
}

void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn) {
    if (jobs <= 1 || n < 2) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(jobs), n);
    std::vector<std::thread> threads;
    threads.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        threads.emplace_back([&, w] {
            for (std::size_t i = w; i < n; i += workers) fn(i);
        });
    }
    for (auto& t : threads) t.join();
}

}  // namespace headliner::io
