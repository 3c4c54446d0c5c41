#include "imdd/frame.hpp"

#include "imdd/error.hpp"

namespace imdd {

std::string to_string(Format f) {
    switch (f) {
        case Format::Pam4: return "pam4";
        case Format::Dmt: return "dmt";
        case Format::Cap: return "cap";
    }
    return "unknown";
}

Format parse_format(const std::string& s) {
    if (s == "pam4") return Format::Pam4;
    if (s == "dmt") return Format::Dmt;
    if (s == "cap") return Format::Cap;
    throw ConfigError("unknown format '" + s + "' (expected pam4, dmt or cap)");
}

void FrameDescriptor::validate() const {
    if (!(training_start <= payload_start && payload_start < frame_length)) {
        throw FramingError("frame boundaries must increase and stay inside the frame");
    }
}

}  // namespace imdd
