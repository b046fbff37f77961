#pragma once

#define DPG_VERSION "0.1.0"
