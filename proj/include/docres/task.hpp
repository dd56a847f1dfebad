#pragma once

#include <array>
#include <string>

#include "docres/errors.hpp"

namespace docres {

enum class TaskKind { Dewarp = 0, Deshadow, Appearance, Deblur, Binarize };

inline constexpr int kTaskCount = 5;

inline constexpr std::array<TaskKind, kTaskCount> kAllTasks = {
    TaskKind::Dewarp, TaskKind::Deshadow, TaskKind::Appearance,
    TaskKind::Deblur, TaskKind::Binarize};

inline const char* task_name(TaskKind t) {
    switch (t) {
        case TaskKind::Dewarp: return "dewarp";
        case TaskKind::Deshadow: return "deshadow";
        case TaskKind::Appearance: return "appearance";
        case TaskKind::Deblur: return "deblur";
        case TaskKind::Binarize: return "binarize";
    }
    return "?";
}

inline TaskKind task_from_name(const std::string& name) {
    for (TaskKind t : kAllTasks)
        if (name == task_name(t)) return t;
    throw FormatError("unknown task token: '" + name + "'");
}

}  // namespace docres
