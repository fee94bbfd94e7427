#include "refgrowth/error.hpp"

namespace refgrowth {

std::string_view to_string(ErrorCategory category) {
    switch (category) {
        case ErrorCategory::config: return "config";
        case ErrorCategory::io: return "io";
        case ErrorCategory::numeric: return "numeric";
        case ErrorCategory::network: return "network";
        case ErrorCategory::data_quality: return "data-quality";
    }
    return "unknown";
}

int exit_code(ErrorCategory category) {
    switch (category) {
        case ErrorCategory::config: return 2;
        case ErrorCategory::io: return 3;
        case ErrorCategory::numeric: return 4;
        case ErrorCategory::network: return 5;
        case ErrorCategory::data_quality: return 6;
    }
    return 1;
}

}  // namespace refgrowth
