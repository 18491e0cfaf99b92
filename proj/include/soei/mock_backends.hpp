#pragma once

#include <memory>

#include "soei/gateway.hpp"

namespace soei {

// Offline stand-ins for the student and judge models. Replies are a pure
// function of the request, so runs are repeatable.
std::shared_ptr<ScriptedBackend> make_mock_student();
std::shared_ptr<ScriptedBackend> make_mock_judge();
// Ten dialogue blocks in the generator output format, following the phase
// and question type requested by the generation prompt.
std::shared_ptr<ScriptedBackend> make_mock_generator();

}  // namespace soei
