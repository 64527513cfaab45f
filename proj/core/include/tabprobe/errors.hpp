#pragma once

#include <stdexcept>
#include <string>

namespace tabprobe {

// Base class for all library errors.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

#define TABPROBE_ERROR(Name)                                        \
    struct Name : Error {                                           \
        explicit Name(const std::string& msg) : Error(msg) {}       \
    }

// dataset
TABPROBE_ERROR(MissingHeader);
TABPROBE_ERROR(RaggedRow);
TABPROBE_ERROR(IoFailure);
TABPROBE_ERROR(IndexOutOfRange);
TABPROBE_ERROR(UnknownFeature);
TABPROBE_ERROR(DegenerateRow);
TABPROBE_ERROR(EmptyDataset);

// transforms
TABPROBE_ERROR(UnperturbableValue);
TABPROBE_ERROR(RenameCollision);
TABPROBE_ERROR(RecodeUnknownValue);

// llm
TABPROBE_ERROR(Timeout);
TABPROBE_ERROR(RateLimited);
TABPROBE_ERROR(AuthFailure);
TABPROBE_ERROR(MalformedResponse);

// scoring / sampling
TABPROBE_ERROR(ConstantSeries);
TABPROBE_ERROR(ExemplarOverlap);

// memtests
TABPROBE_ERROR(NoUniqueFeature);
TABPROBE_ERROR(NotApplicable);

// fewshot
TABPROBE_ERROR(ClassStarvation);
TABPROBE_ERROR(SingleClass);
TABPROBE_ERROR(ParseAbort);

// timeseries
TABPROBE_ERROR(ZeroActual);

// cli / reports
TABPROBE_ERROR(ConfigInvalid);
TABPROBE_ERROR(SchemaMismatch);

#undef TABPROBE_ERROR

}  // namespace tabprobe
