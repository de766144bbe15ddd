#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace masq {

/// Default engine invocation; any command that prints the transcript to
/// stdout works. `{input}` is replaced with the (shell-quoted) image path.
inline constexpr std::string_view kDefaultOcrCommand = "tesseract {input} stdout";

struct OcrResult {
    std::filesystem::path source_image;
    std::string transcript;           // may be empty only with a warning
    std::string engine_cmd;           // the template as given, for provenance
    std::vector<std::string> warnings;
};

/// Substitutes `{input}`, runs the external OCR process, and captures stdout
/// as the transcript. A missing engine maps to Errc::OcrEngineMissing; any
/// other nonzero exit to Errc::OcrEngineFailed with captured stderr.
OcrResult run_ocr(const std::filesystem::path& image_path, std::string_view cmd_template);

}  // namespace masq
