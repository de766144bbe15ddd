#include "masq/ocr.hpp"

#include <sys/wait.h>
#include <unistd.h>

#include <array>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "masq/core.hpp"

namespace masq {

namespace {

std::string shell_quote(const std::string& s) {
    std::string out = "'";
    for (char c : s) {
        if (c == '\'') out += "'\\''";
        else out += c;
    }
    out += "'";
    return out;
}

std::string read_and_remove(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buffer;
    if (in) buffer << in.rdbuf();
    std::error_code ec;
    std::filesystem::remove(path, ec);
    return std::move(buffer).str();
}

}  // namespace

OcrResult run_ocr(const std::filesystem::path& image_path, std::string_view cmd_template) {
    constexpr std::string_view placeholder = "{input}";
    std::size_t at = cmd_template.find(placeholder);
    if (at == std::string_view::npos) {
        throw Error(Errc::MissingPlaceholder,
                    "OCR command template lacks {input}: '" + std::string(cmd_template) + "'");
    }
    if (!std::filesystem::exists(image_path)) {
        throw Error(Errc::UnreadableFile, image_path.string());
    }

    std::string command(cmd_template);
    command.replace(at, placeholder.size(), shell_quote(image_path.string()));

    std::filesystem::path stderr_path =
        std::filesystem::temp_directory_path() /
        ("masq-ocr-" + std::to_string(::getpid()) + "-" +
         std::to_string(reinterpret_cast<std::uintptr_t>(&command)) + ".err");
    command += " 2>" + shell_quote(stderr_path.string());

    FILE* pipe = ::popen(command.c_str(), "r");
    if (pipe == nullptr) {
        throw Error(Errc::OcrEngineFailed, "cannot spawn OCR engine: " + std::string(cmd_template));
    }

    std::string transcript;
    std::array<char, 4096> chunk{};
    std::size_t got = 0;
    while ((got = std::fread(chunk.data(), 1, chunk.size(), pipe)) > 0) {
        transcript.append(chunk.data(), got);
    }
    int status = ::pclose(pipe);
    std::string diagnostics = read_and_remove(stderr_path);

    if (status == -1) {
        throw Error(Errc::OcrEngineFailed, "OCR engine did not report a status");
    }
    if (WIFEXITED(status)) {
        int code = WEXITSTATUS(status);
        if (code == 127) {
            throw Error(Errc::OcrEngineMissing,
                        "OCR engine not found for template '" + std::string(cmd_template) +
                            "': " + diagnostics);
        }
        if (code != 0) {
            throw Error(Errc::OcrEngineFailed, "OCR engine exited with " +
                                                   std::to_string(code) + ": " + diagnostics);
        }
    } else {
        throw Error(Errc::OcrEngineFailed, "OCR engine terminated abnormally: " + diagnostics);
    }

    OcrResult result{image_path, std::move(transcript), std::string(cmd_template), {}};
    if (result.transcript.empty()) {
        result.warnings.push_back("OCR produced an empty transcript for " + image_path.string());
    }
    return result;
}

}  // namespace masq
