use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

macro_rules! color_names {
    ($($variant:ident => $label:literal),+ $(,)?) => {
        /// One of the 40 color labels a verbalization may use.
        #[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
        pub enum ColorName {
            $(
                #[serde(rename = $label)]
                $variant,
            )+
        }

        impl ColorName {
            /// Every allowed color, in prompt order.
            pub const ALL: [ColorName; 40] = [$(ColorName::$variant),+];

            pub fn as_str(self) -> &'static str {
                match self {
                    $(ColorName::$variant => $label,)+
                }
            }
        }

        impl FromStr for ColorName {
            type Err = UnknownColor;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                match s {
                    $($label => Ok(ColorName::$variant),)+
                    other => Err(UnknownColor(other.to_string())),
                }
            }
        }
    };
}

color_names! {
    Red => "Red",
    DarkRed => "Dark_Red",
    Green => "Green",
    BrightGreen => "Bright_Green",
    DarkGreen => "Dark_Green",
    LightGreen => "Light_Green",
    MudGreen => "Mud_Green",
    Blue => "Blue",
    DarkBlue => "Dark_Blue",
    LightBlue => "Light_Blue",
    RoyalBlue => "Royal_Blue",
    Black => "Black",
    White => "White",
    OffWhite => "Off_White",
    Gray => "Gray",
    DarkGray => "Dark_Gray",
    Silver => "Silver",
    Cream => "Cream",
    Magenta => "Magenta",
    Cyan => "Cyan",
    Yellow => "Yellow",
    Mustard => "Mustard",
    Khaki => "Khaki",
    Brown => "Brown",
    DarkBrown => "Dark_Brown",
    Violet => "Violet",
    Pink => "Pink",
    DarkPink => "Dark_Pink",
    Maroon => "Maroon",
    Tan => "Tan",
    Purple => "Purple",
    Lavender => "Lavender",
    Turquoise => "Turquoise",
    Plum => "Plum",
    Gold => "Gold",
    Emerald => "Emerald",
    Orange => "Orange",
    Beige => "Beige",
    Lilac => "Lilac",
    Olive => "Olive",
}

impl fmt::Display for ColorName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("unknown color name `{0}`")]
pub struct UnknownColor(pub String);

/// Coarse color temperature.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Tone {
    Warm,
    Neutral,
    Cool,
}

impl Tone {
    pub const ALL: [Tone; 3] = [Tone::Warm, Tone::Neutral, Tone::Cool];

    pub fn as_str(self) -> &'static str {
        match self {
            Tone::Warm => "warm",
            Tone::Neutral => "neutral",
            Tone::Cool => "cool",
        }
    }
}

impl fmt::Display for Tone {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Tone {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "warm" => Ok(Tone::Warm),
            "neutral" => Ok(Tone::Neutral),
            "cool" => Ok(Tone::Cool),
            other => Err(other.to_string()),
        }
    }
}

/// Python-style rendering of the allowed-colors list used in prompt templates.
pub fn allowed_colors_literal() -> String {
    let quoted: Vec<String> = ColorName::ALL
        .iter()
        .map(|c| format!("'{}'", c.as_str()))
        .collect();
    format!("[{}]", quoted.join(", "))
}
