// Copyright 2026 The PAM Desk Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <string_view>

namespace pam {

enum class Task { category, explanation, caption, stream };
enum class Modality { image, video };
enum class Language { en, zh };

std::string to_string(Task t);
std::string to_string(Modality m);
std::string to_string(Language l);

// Parsers throw InputError on unknown names.
Task parse_task(std::string_view s);
Modality parse_modality(std::string_view s);
Language parse_language(std::string_view s);

}  // namespace pam
