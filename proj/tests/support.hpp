#pragma once

// Shared helpers for the unit and acceptance suites: scratch directories, a
// deterministic RNG for property tests, a subprocess runner for CLI tests,
// and an expat-free XML shape scanner used as an independent structure
// oracle. Everything here is header-only.

#include <sys/wait.h>

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace masq::test {

/// Unique scratch directory removed on scope exit.
class TempDir {
public:
    TempDir() {
        std::string tmpl = (std::filesystem::temp_directory_path() / "masq-test-XXXXXX").string();
        if (::mkdtemp(tmpl.data()) == nullptr) {
            throw std::runtime_error("mkdtemp failed for " + tmpl);
        }
        path_ = tmpl;
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const noexcept { return path_; }
    std::filesystem::path operator/(std::string_view name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline void write_text(const std::filesystem::path& path, std::string_view content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
}

inline std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

inline std::size_t count_lines(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) return 0;
    std::string content = read_text(path);
    return static_cast<std::size_t>(std::count(content.begin(), content.end(), '\n'));
}

/// splitmix64: deterministic, seedable, no global state.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        state_ += 0x9e3779b97f4a7c15ULL;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    /// Uniform in [0, n); n must be nonzero.
    std::size_t below(std::size_t n) { return static_cast<std::size_t>(next() % n); }

    /// Uniform in [lo, hi] inclusive.
    std::size_t between(std::size_t lo, std::size_t hi) { return lo + below(hi - lo + 1); }

    bool chance(double p) { return static_cast<double>(next() >> 11) * 0x1.0p-53 < p; }

    template <typename T>
    const T& pick(const std::vector<T>& items) {
        return items[below(items.size())];
    }

    std::string ident(std::size_t min_len, std::size_t max_len) {
        static const char alphabet[] = "abcdefghijklmnopqrstuvwxyz";
        std::size_t len = between(min_len, max_len);
        std::string s;
        s.reserve(len);
        for (std::size_t i = 0; i < len; ++i) s.push_back(alphabet[below(26)]);
        return s;
    }

private:
    std::uint64_t state_;
};

struct CommandResult {
    int exit_code = -1;
    std::string output;  // stdout and stderr interleaved
};

/// Runs through the shell and captures combined output.
inline CommandResult run_command(const std::string& command) {
    CommandResult result;
    FILE* pipe = ::popen((command + " 2>&1").c_str(), "r");
    if (pipe == nullptr) throw std::runtime_error("popen failed: " + command);
    char buffer[4096];
    std::size_t got = 0;
    while ((got = std::fread(buffer, 1, sizeof buffer, pipe)) > 0) {
        result.output.append(buffer, got);
    }
    int status = ::pclose(pipe);
    result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return result;
}

inline std::string shell_quote(std::string_view arg) {
    std::string quoted = "'";
    for (char c : arg) {
        if (c == '\'') {
            quoted += "'\\''";
        } else {
            quoted.push_back(c);
        }
    }
    quoted.push_back('\'');
    return quoted;
}

/// Runs the installed CLI binary with a scrubbed environment: SECRET_KEY and
/// OCR_CMD are cleared unless listed in `env`. `cwd` defaults to the caller's
/// working directory.
inline CommandResult run_cli(const std::vector<std::string>& args,
                             const std::vector<std::pair<std::string, std::string>>& env = {},
                             const std::filesystem::path& cwd = {}) {
    std::string command = "env -u SECRET_KEY -u OCR_CMD";
    for (const auto& [key, value] : env) {
        command += " " + key + "=" + shell_quote(value);
    }
    command += " " + shell_quote(MASQ_CLI_PATH);
    for (const std::string& arg : args) {
        command += " " + shell_quote(arg);
    }
    if (!cwd.empty()) {
        command = "cd " + shell_quote(cwd.string()) + " && " + command;
    }
    return run_command(command);
}

/// One start tag as seen by the shape oracle: element name plus the sorted
/// set of its attribute names.
struct ShapeEntry {
    std::string name;
    std::vector<std::string> attr_names;

    friend bool operator==(const ShapeEntry&, const ShapeEntry&) = default;
};

/// Independent XML structure scan: walks the raw bytes and records every
/// start tag in document order (equals preorder). Deliberately not built on
/// the production parser so structure comparisons have a second opinion.
/// Handles comments, PIs, CDATA, DOCTYPE without internal subset, and '>'
/// inside quoted attribute values.
inline std::vector<ShapeEntry> scan_xml_shape(std::string_view xml) {
    std::vector<ShapeEntry> shape;
    const std::size_t npos = std::string_view::npos;
    std::size_t i = 0;
    auto skip_past = [&](std::string_view marker, std::size_t from) {
        std::size_t at = xml.find(marker, from);
        return at == npos ? xml.size() : at + marker.size();
    };
    while (i < xml.size()) {
        if (xml[i] != '<') {
            ++i;
            continue;
        }
        if (xml.compare(i, 4, "<!--") == 0) {
            i = skip_past("-->", i + 4);
            continue;
        }
        if (xml.compare(i, 9, "<![CDATA[") == 0) {
            i = skip_past("]]>", i + 9);
            continue;
        }
        if (xml.compare(i, 2, "<?") == 0) {
            i = skip_past("?>", i + 2);
            continue;
        }
        if (xml.compare(i, 2, "<!") == 0 || xml.compare(i, 2, "</") == 0) {
            i = skip_past(">", i + 2);
            continue;
        }
        std::size_t j = i + 1;
        auto is_space = [](char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; };
        std::size_t name_start = j;
        while (j < xml.size() && !is_space(xml[j]) && xml[j] != '/' && xml[j] != '>') ++j;
        ShapeEntry entry;
        entry.name = std::string(xml.substr(name_start, j - name_start));
        while (j < xml.size() && xml[j] != '>') {
            while (j < xml.size() && is_space(xml[j])) ++j;
            if (j >= xml.size() || xml[j] == '>') break;
            if (xml[j] == '/') {
                ++j;
                continue;
            }
            std::size_t attr_start = j;
            while (j < xml.size() && xml[j] != '=' && xml[j] != '>' && xml[j] != '/' &&
                   !is_space(xml[j])) {
                ++j;
            }
            entry.attr_names.push_back(std::string(xml.substr(attr_start, j - attr_start)));
            while (j < xml.size() && is_space(xml[j])) ++j;
            if (j < xml.size() && xml[j] == '=') {
                ++j;
                while (j < xml.size() && is_space(xml[j])) ++j;
                if (j < xml.size() && (xml[j] == '"' || xml[j] == '\'')) {
                    char quote = xml[j];
                    ++j;
                    while (j < xml.size() && xml[j] != quote) ++j;
                    if (j < xml.size()) ++j;
                }
            }
        }
        std::sort(entry.attr_names.begin(), entry.attr_names.end());
        shape.push_back(std::move(entry));
        i = j + 1;
    }
    return shape;
}

}  // namespace masq::test
